#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "analysis/stats.hpp"

namespace droidpot::analysis {

const char* service_label(uint16_t port) {
    switch (port) {
    case 22: return "SSH";
    case 1433: return "MSSQL";
    case 3306: return "MSSQL";
    case 5900: return "VNC";
    case 3389: return "RDP";
    case 23: return "Telnet";
    case 80: return "HTTP";
    case 110: return "POP3";
    case 25: return "SMTP";
    case 139: return "NetBIOS";
    case 143: return "IMAP";
    case 53: return "DNS";
    case 1080: return "SOCKS";
    case 5060: return "SIP";
    case 445: return "MS AD";
    default: return "";
    }
}

RankedDistribution rank(std::vector<RankedEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.key < b.key;
    });
    return RankedDistribution{std::move(entries)};
}

namespace serial {

TransportSummary transport_summary(const EventStore& store, uint16_t vidx) {
    TransportSummary out;
    std::set<uint16_t> tcp_ports, udp_ports;
    for (const auto& r : store.rows) {
        if (r.vantage_idx != vidx) continue;
        if (r.transport == Transport::tcp) {
            out.tcp.attacks++;
            tcp_ports.insert(r.dst_port);
        } else {
            out.udp.attacks++;
            udp_ports.insert(r.dst_port);
        }
    }
    out.tcp.distinct_ports = tcp_ports.size();
    out.udp.distinct_ports = udp_ports.size();
    return out;
}

RankedDistribution all_ports_ranked(const EventStore& store, uint16_t vidx) {
    std::map<uint16_t, uint64_t> counts;
    for (const auto& r : store.rows)
        if (r.vantage_idx == vidx) counts[r.dst_port]++;
    std::vector<RankedEntry> entries;
    entries.reserve(counts.size());
    for (const auto& [port, count] : counts) entries.push_back({port, count});
    return rank(std::move(entries));
}

AsTally attacks_per_as(const EventStore& store, uint16_t vidx, const AsnDb& db) {
    AsTally out;
    std::map<uint32_t, uint64_t> counts;
    for (const auto& r : store.rows) {
        if (r.vantage_idx != vidx) continue;
        uint32_t asn = db.lookup(r.src_ip).asn;
        if (asn == 0)
            out.unknown++;
        else
            counts[asn]++;
    }
    std::vector<RankedEntry> entries;
    entries.reserve(counts.size());
    for (const auto& [asn, count] : counts) entries.push_back({asn, count});
    out.ranked = rank(std::move(entries));
    return out;
}

AsTally attackers_per_as(const EventStore& store, uint16_t vidx, const AsnDb& db) {
    AsTally out;
    std::map<uint32_t, std::set<IpAddr>> sources;
    std::set<IpAddr> unknown_sources;
    for (const auto& r : store.rows) {
        if (r.vantage_idx != vidx) continue;
        uint32_t asn = db.lookup(r.src_ip).asn;
        if (asn == 0)
            unknown_sources.insert(r.src_ip);
        else
            sources[asn].insert(r.src_ip);
    }
    out.unknown = unknown_sources.size();
    std::vector<RankedEntry> entries;
    entries.reserve(sources.size());
    for (const auto& [asn, ips] : sources) entries.push_back({asn, ips.size()});
    out.ranked = rank(std::move(entries));
    return out;
}

HourlySeries hourly_rate(const EventStore& store, uint16_t vidx) {
    HourlySeries out;
    TimestampMs min_ts = 0, max_ts = 0;
    uint64_t total = 0;
    for (const auto& r : store.rows) {
        if (r.vantage_idx != vidx) continue;
        if (total == 0 || r.ts < min_ts) min_ts = r.ts;
        if (total == 0 || r.ts > max_ts) max_ts = r.ts;
        total++;
    }
    if (total == 0) return out;

    out.first_hour = min_ts - (min_ts % kHourMs);
    if (max_ts - min_ts < kHourMs) {
        out.short_range = true;
        out.counts = {total};
        out.mean = static_cast<double>(total);
        return out;
    }
    TimestampMs last_hour = max_ts - (max_ts % kHourMs);
    size_t buckets = static_cast<size_t>((last_hour - out.first_hour) / kHourMs) + 1;
    out.counts.assign(buckets, 0);
    for (const auto& r : store.rows) {
        if (r.vantage_idx != vidx) continue;
        out.counts[static_cast<size_t>((r.ts - out.first_hour) / kHourMs)]++;
    }
    out.mean = static_cast<double>(total) / static_cast<double>(buckets);
    return out;
}

} // namespace serial

namespace {

uint16_t resolve_or_sentinel(const EventStore& store, const std::string& vantage) {
    auto idx = store.vantage_index(vantage);
    return idx ? *idx : uint16_t(0xFFFF);
}

} // namespace

TransportSummary transport_summary(const EventStore& store, const std::string& vantage,
                                   ExecMode mode) {
    uint16_t vidx = resolve_or_sentinel(store, vantage);
    return mode == ExecMode::serial ? serial::transport_summary(store, vidx)
                                    : parallel::transport_summary(store, vidx);
}

RankedDistribution all_ports_ranked(const EventStore& store, const std::string& vantage,
                                    ExecMode mode) {
    uint16_t vidx = resolve_or_sentinel(store, vantage);
    return mode == ExecMode::serial ? serial::all_ports_ranked(store, vidx)
                                    : parallel::all_ports_ranked(store, vidx);
}

RankedDistribution top_k_ports(const EventStore& store, const std::string& vantage, size_t k,
                               ExecMode mode) {
    RankedDistribution all = all_ports_ranked(store, vantage, mode);
    if (all.entries.size() > k) all.entries.resize(k);
    return all;
}

AsTally attacks_per_as(const EventStore& store, const std::string& vantage, const AsnDb& db,
                       ExecMode mode) {
    uint16_t vidx = resolve_or_sentinel(store, vantage);
    return mode == ExecMode::serial ? serial::attacks_per_as(store, vidx, db)
                                    : parallel::attacks_per_as(store, vidx, db);
}

AsTally attackers_per_as(const EventStore& store, const std::string& vantage, const AsnDb& db,
                         ExecMode mode) {
    uint16_t vidx = resolve_or_sentinel(store, vantage);
    return mode == ExecMode::serial ? serial::attackers_per_as(store, vidx, db)
                                    : parallel::attackers_per_as(store, vidx, db);
}

HourlySeries hourly_rate(const EventStore& store, const std::string& vantage, ExecMode mode) {
    uint16_t vidx = resolve_or_sentinel(store, vantage);
    return mode == ExecMode::serial ? serial::hourly_rate(store, vidx)
                                    : parallel::hourly_rate(store, vidx);
}

} // namespace droidpot::analysis
