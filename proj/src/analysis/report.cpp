#include "analysis/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "core/clock.hpp"

namespace droidpot::analysis {

namespace fs = std::filesystem;

namespace {

bool write_file(const fs::path& path, const std::string& content, std::string* error) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) {
        *error = "cannot write " + path.string();
        return false;
    }
    out << content;
    return out.good();
}

std::string pad(const std::string& s, size_t width) {
    std::string out = s;
    while (out.size() < width) out += " ";
    return out;
}

std::string ranked_csv(const RankedDistribution& dist) {
    std::string out = "rank,key,count\n";
    for (size_t i = 0; i < dist.entries.size(); i++)
        out += std::to_string(i + 1) + "," + std::to_string(dist.entries[i].key) + "," +
               std::to_string(dist.entries[i].count) + "\n";
    return out;
}

nlohmann::ordered_json ranked_json(const RankedDistribution& dist, const AsnDb* db,
                                   size_t cap) {
    auto arr = nlohmann::ordered_json::array();
    for (size_t i = 0; i < dist.entries.size() && i < cap; i++) {
        nlohmann::ordered_json row;
        row["rank"] = i + 1;
        row["asn"] = dist.entries[i].key;
        if (db) {
            const std::string* name = db->as_name(static_cast<uint32_t>(dist.entries[i].key));
            row["name"] = name ? *name : "";
        }
        row["count"] = dist.entries[i].count;
        arr.push_back(std::move(row));
    }
    return arr;
}

} // namespace

std::optional<std::string> emit_report(const std::string& out_dir, const ReportInputs& in) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) return out_dir + ": " + ec.message();
    fs::path dir(out_dir);
    std::string error;

    // table1.txt
    {
        std::string t;
        t += "# Attacked ports per transport protocol / # Attacks per transport protocol\n";
        t += "vantage: " + in.vantage + "\n\n";
        t += pad("", 6) + pad("# Attacked ports", 20) + "# Attacks\n";
        t += pad("TCP", 6) + pad(std::to_string(in.transport.tcp.distinct_ports), 20) +
             std::to_string(in.transport.tcp.attacks) + "\n";
        t += pad("UDP", 6) + pad(std::to_string(in.transport.udp.distinct_ports), 20) +
             std::to_string(in.transport.udp.attacks) + "\n";
        if (!write_file(dir / "table1.txt", t, &error)) return error;
    }

    // table2.txt
    {
        std::string t;
        t += "Top-" + std::to_string(in.top_ports.entries.size()) +
             " of the most attacked ports\n";
        t += "vantage: " + in.vantage + "\n\n";
        t += pad("rank", 6) + pad("port", 8) + pad("service", 10) + "count\n";
        for (size_t i = 0; i < in.top_ports.entries.size(); i++) {
            const auto& e = in.top_ports.entries[i];
            t += pad(std::to_string(i + 1), 6) + pad(std::to_string(e.key), 8) +
                 pad(service_label(static_cast<uint16_t>(e.key)), 10) +
                 std::to_string(e.count) + "\n";
        }
        if (!write_file(dir / "table2.txt", t, &error)) return error;
    }

    if (!write_file(dir / "attacks_per_as.csv", ranked_csv(in.attacks_as.ranked), &error))
        return error;
    if (!write_file(dir / "attackers_per_as.csv", ranked_csv(in.attackers_as.ranked), &error))
        return error;

    // hourly.csv: key is the UTC bucket start
    {
        std::string t = "rank,key,count\n";
        for (size_t i = 0; i < in.hourly.counts.size(); i++) {
            TimestampMs bucket = in.hourly.first_hour + static_cast<TimestampMs>(i) * kHourMs;
            t += std::to_string(i + 1) + "," + format_rfc3339_ms(bucket) + "," +
                 std::to_string(in.hourly.counts[i]) + "\n";
        }
        if (!write_file(dir / "hourly.csv", t, &error)) return error;
    }

    // summary.json
    {
        uint64_t total = in.transport.tcp.attacks + in.transport.udp.attacks;
        nlohmann::ordered_json j;
        j["vantage"] = in.vantage;
        j["events"] = in.events;
        j["excluded_dropped"] = in.excluded_dropped;
        j["malformed_skipped"] = in.malformed_skipped;
        j["duplicates_dropped"] = in.duplicates_dropped;
        j["transport"] = {{"tcp",
                           {{"ports", in.transport.tcp.distinct_ports},
                            {"attacks", in.transport.tcp.attacks}}},
                          {"udp",
                           {{"ports", in.transport.udp.distinct_ports},
                            {"attacks", in.transport.udp.attacks}}}};
        j["tcp_share"] =
            total == 0 ? 0.0
                       : static_cast<double>(in.transport.tcp.attacks) / static_cast<double>(total);
        auto ports = nlohmann::ordered_json::array();
        for (size_t i = 0; i < in.top_ports.entries.size(); i++) {
            const auto& e = in.top_ports.entries[i];
            ports.push_back({{"rank", i + 1},
                             {"port", e.key},
                             {"service", service_label(static_cast<uint16_t>(e.key))},
                             {"count", e.count}});
        }
        j["top_ports"] = ports;
        j["as"] = {{"attacks_ranked", ranked_json(in.attacks_as.ranked, in.db, 50)},
                   {"attacks_unknown", in.attacks_as.unknown},
                   {"attackers_ranked", ranked_json(in.attackers_as.ranked, in.db, 50)},
                   {"attackers_unknown", in.attackers_as.unknown}};
        j["hourly"] = {{"hours", in.hourly.counts.size()},
                       {"mean", in.hourly.mean},
                       {"short_range", in.hourly.short_range},
                       {"first_hour", in.hourly.counts.empty()
                                          ? nlohmann::ordered_json(nullptr)
                                          : nlohmann::ordered_json(
                                                format_rfc3339_ms(in.hourly.first_hour))}};
        if (!write_file(dir / "summary.json", j.dump(2) + "\n", &error)) return error;
    }
    return std::nullopt;
}

} // namespace droidpot::analysis
