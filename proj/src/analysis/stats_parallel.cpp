// OpenMP kernels for the analysis statistics. Outputs are bit-identical to
// the serial reference: partial tallies are merged into ordered containers
// before ranking, so thread count and schedule never change a result.

#ifdef DROIDPOT_HAVE_OPENMP
#include <omp.h>
#endif

#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "analysis/stats.hpp"

namespace droidpot::analysis::parallel {

#ifndef DROIDPOT_HAVE_OPENMP

TransportSummary transport_summary(const EventStore& s, uint16_t v) {
    return serial::transport_summary(s, v);
}
RankedDistribution all_ports_ranked(const EventStore& s, uint16_t v) {
    return serial::all_ports_ranked(s, v);
}
AsTally attacks_per_as(const EventStore& s, uint16_t v, const AsnDb& db) {
    return serial::attacks_per_as(s, v, db);
}
AsTally attackers_per_as(const EventStore& s, uint16_t v, const AsnDb& db) {
    return serial::attackers_per_as(s, v, db);
}
HourlySeries hourly_rate(const EventStore& s, uint16_t v) { return serial::hourly_rate(s, v); }

#else

namespace {
constexpr size_t kPortSpace = 65536;
}

TransportSummary transport_summary(const EventStore& store, uint16_t vidx) {
    const auto& rows = store.rows;
    const int64_t n = static_cast<int64_t>(rows.size());
    uint64_t tcp_attacks = 0, udp_attacks = 0;
    std::vector<uint8_t> tcp_seen(kPortSpace, 0), udp_seen(kPortSpace, 0);

#pragma omp parallel
    {
        uint64_t my_tcp = 0, my_udp = 0;
        std::vector<uint8_t> my_tcp_seen(kPortSpace, 0), my_udp_seen(kPortSpace, 0);
#pragma omp for nowait
        for (int64_t i = 0; i < n; i++) {
            const Row& r = rows[static_cast<size_t>(i)];
            if (r.vantage_idx != vidx) continue;
            if (r.transport == Transport::tcp) {
                my_tcp++;
                my_tcp_seen[r.dst_port] = 1;
            } else {
                my_udp++;
                my_udp_seen[r.dst_port] = 1;
            }
        }
#pragma omp critical
        {
            tcp_attacks += my_tcp;
            udp_attacks += my_udp;
            for (size_t p = 0; p < kPortSpace; p++) {
                tcp_seen[p] |= my_tcp_seen[p];
                udp_seen[p] |= my_udp_seen[p];
            }
        }
    }

    TransportSummary out;
    out.tcp.attacks = tcp_attacks;
    out.udp.attacks = udp_attacks;
    for (size_t p = 0; p < kPortSpace; p++) {
        out.tcp.distinct_ports += tcp_seen[p];
        out.udp.distinct_ports += udp_seen[p];
    }
    return out;
}

RankedDistribution all_ports_ranked(const EventStore& store, uint16_t vidx) {
    const auto& rows = store.rows;
    const int64_t n = static_cast<int64_t>(rows.size());
    std::vector<uint64_t> counts(kPortSpace, 0);

#pragma omp parallel
    {
        std::vector<uint64_t> mine(kPortSpace, 0);
#pragma omp for nowait
        for (int64_t i = 0; i < n; i++) {
            const Row& r = rows[static_cast<size_t>(i)];
            if (r.vantage_idx == vidx) mine[r.dst_port]++;
        }
#pragma omp critical
        for (size_t p = 0; p < kPortSpace; p++) counts[p] += mine[p];
    }

    std::vector<RankedEntry> entries;
    for (size_t p = 0; p < kPortSpace; p++)
        if (counts[p] > 0) entries.push_back({p, counts[p]});
    return rank(std::move(entries));
}

AsTally attacks_per_as(const EventStore& store, uint16_t vidx, const AsnDb& db) {
    const auto& rows = store.rows;
    const int64_t n = static_cast<int64_t>(rows.size());
    AsTally out;
    std::map<uint32_t, uint64_t> counts;
    uint64_t unknown = 0;

#pragma omp parallel
    {
        std::unordered_map<uint32_t, uint64_t> mine;
        uint64_t my_unknown = 0;
#pragma omp for nowait
        for (int64_t i = 0; i < n; i++) {
            const Row& r = rows[static_cast<size_t>(i)];
            if (r.vantage_idx != vidx) continue;
            uint32_t asn = db.lookup(r.src_ip).asn;
            if (asn == 0)
                my_unknown++;
            else
                mine[asn]++;
        }
#pragma omp critical
        {
            unknown += my_unknown;
            for (const auto& [asn, count] : mine) counts[asn] += count;
        }
    }

    out.unknown = unknown;
    std::vector<RankedEntry> entries;
    entries.reserve(counts.size());
    for (const auto& [asn, count] : counts) entries.push_back({asn, count});
    out.ranked = rank(std::move(entries));
    return out;
}

AsTally attackers_per_as(const EventStore& store, uint16_t vidx, const AsnDb& db) {
    const auto& rows = store.rows;
    AsTally out;
    std::map<uint32_t, uint64_t> counts;
    uint64_t unknown = 0;

    // Distinct-source counting partitions rows by source-IP hash, so every
    // address lands in exactly one partition and sums stay schedule-free.
#pragma omp parallel
    {
        int threads = omp_get_num_threads();
        int me = omp_get_thread_num();
        std::unordered_map<uint32_t, std::unordered_set<IpAddr, IpAddrHash>> mine;
        std::unordered_set<IpAddr, IpAddrHash> my_unknown;
        for (const Row& r : rows) {
            if (r.vantage_idx != vidx) continue;
            if (static_cast<int>(IpAddrHash{}(r.src_ip) % static_cast<size_t>(threads)) != me)
                continue;
            uint32_t asn = db.lookup(r.src_ip).asn;
            if (asn == 0)
                my_unknown.insert(r.src_ip);
            else
                mine[asn].insert(r.src_ip);
        }
#pragma omp critical
        {
            unknown += my_unknown.size();
            for (const auto& [asn, ips] : mine) counts[asn] += ips.size();
        }
    }

    out.unknown = unknown;
    std::vector<RankedEntry> entries;
    entries.reserve(counts.size());
    for (const auto& [asn, count] : counts) entries.push_back({asn, count});
    out.ranked = rank(std::move(entries));
    return out;
}

HourlySeries hourly_rate(const EventStore& store, uint16_t vidx) {
    const auto& rows = store.rows;
    const int64_t n = static_cast<int64_t>(rows.size());
    HourlySeries out;

    TimestampMs min_ts = 0, max_ts = 0;
    uint64_t total = 0;
#pragma omp parallel
    {
        TimestampMs my_min = 0, my_max = 0;
        uint64_t my_total = 0;
#pragma omp for nowait
        for (int64_t i = 0; i < n; i++) {
            const Row& r = rows[static_cast<size_t>(i)];
            if (r.vantage_idx != vidx) continue;
            if (my_total == 0 || r.ts < my_min) my_min = r.ts;
            if (my_total == 0 || r.ts > my_max) my_max = r.ts;
            my_total++;
        }
#pragma omp critical
        {
            if (my_total > 0) {
                if (total == 0 || my_min < min_ts) min_ts = my_min;
                if (total == 0 || my_max > max_ts) max_ts = my_max;
                total += my_total;
            }
        }
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

#pragma omp parallel
    {
        std::vector<uint64_t> mine(buckets, 0);
#pragma omp for nowait
        for (int64_t i = 0; i < n; i++) {
            const Row& r = rows[static_cast<size_t>(i)];
            if (r.vantage_idx != vidx) continue;
            mine[static_cast<size_t>((r.ts - out.first_hour) / kHourMs)]++;
        }
#pragma omp critical
        for (size_t b = 0; b < buckets; b++) out.counts[b] += mine[b];
    }
    out.mean = static_cast<double>(total) / static_cast<double>(buckets);
    return out;
}

#endif // DROIDPOT_HAVE_OPENMP

} // namespace droidpot::analysis::parallel
