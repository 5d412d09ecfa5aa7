#include "analysis/store.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "exporter/wire.hpp"

namespace droidpot::analysis {

namespace {

struct Builder {
    EventStore store;
    std::unordered_map<std::string, uint16_t> vantage_idx;
    std::unordered_set<uint64_t> seen; // (vantage_idx << 48) ^ event_id

    void add_line(const std::string& line) {
        if (line.empty()) return;
        auto event = wire::parse_event(line);
        if (!event) {
            store.malformed_skipped++;
            return;
        }
        if (event->excluded) {
            store.excluded_dropped++;
            return;
        }
        std::string label = event->vantage.label();
        auto [it, inserted] = vantage_idx.try_emplace(
            label, static_cast<uint16_t>(store.vantages.size()));
        if (inserted) store.vantages.push_back(label);
        uint16_t vidx = it->second;

        uint64_t dedup_key = (static_cast<uint64_t>(vidx) << 48) ^ event->event_id;
        if (!seen.insert(dedup_key).second) {
            store.duplicates_dropped++;
            return;
        }

        Row row;
        row.event_id = event->event_id;
        row.ts = event->timestamp;
        row.src_ip = event->src_ip;
        row.dst_port = event->dst_port;
        row.vantage_idx = vidx;
        row.transport = event->transport;
        row.service = event->service;
        store.rows.push_back(row);
    }

    EventStore finish() {
        std::sort(store.rows.begin(), store.rows.end(), [](const Row& a, const Row& b) {
            if (a.ts != b.ts) return a.ts < b.ts;
            if (a.vantage_idx != b.vantage_idx) return a.vantage_idx < b.vantage_idx;
            return a.event_id < b.event_id;
        });
        return std::move(store);
    }
};

} // namespace

std::optional<uint16_t> EventStore::vantage_index(const std::string& label) const {
    for (size_t i = 0; i < vantages.size(); i++)
        if (vantages[i] == label) return static_cast<uint16_t>(i);
    return std::nullopt;
}

size_t EventStore::count_for(uint16_t vantage_idx) const {
    size_t n = 0;
    for (const auto& r : rows)
        if (r.vantage_idx == vantage_idx) n++;
    return n;
}

std::optional<EventStore> ingest(const std::vector<std::string>& paths, IngestError* error) {
    Builder b;
    size_t readable = 0;
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) continue;
        readable++;
        std::string line;
        while (std::getline(in, line)) b.add_line(line);
    }
    if (readable == 0) {
        if (error) error->message = "no readable input files";
        return std::nullopt;
    }
    return b.finish();
}

EventStore ingest_lines(const std::vector<std::string>& lines) {
    Builder b;
    for (const auto& line : lines) b.add_line(line);
    return b.finish();
}

} // namespace droidpot::analysis
