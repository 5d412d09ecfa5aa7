#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "analysis/asn.hpp"
#include "analysis/store.hpp"

namespace droidpot::analysis {

// Every statistic has a serial reference implementation and an OpenMP
// kernel; both produce bit-identical results and the dispatchers below pick
// one. tools/droidpot_bench compares their runtimes.
enum class ExecMode : uint8_t { serial, parallel };

struct TransportStat {
    uint64_t distinct_ports = 0;
    uint64_t attacks = 0;
    bool operator==(const TransportStat&) const = default;
};

struct TransportSummary {
    TransportStat tcp;
    TransportStat udp;
    bool operator==(const TransportSummary&) const = default;
};

struct RankedEntry {
    uint64_t key = 0;
    uint64_t count = 0;
    bool operator==(const RankedEntry&) const = default;
};

// Ordered by descending count, ties broken by ascending key; rank is the
// 1-based position.
struct RankedDistribution {
    std::vector<RankedEntry> entries;
    bool operator==(const RankedDistribution&) const = default;
};

// ASN 0 (unattributed) is reported as a separate bucket, never ranked.
struct AsTally {
    RankedDistribution ranked;
    uint64_t unknown = 0;
    bool operator==(const AsTally&) const = default;
};

struct HourlySeries {
    TimestampMs first_hour = 0; // bucket 0 start (UTC hour boundary)
    std::vector<uint64_t> counts;
    double mean = 0.0;
    bool short_range = false;
    bool operator==(const HourlySeries&) const = default;
};

constexpr TimestampMs kHourMs = 3600'000;

TransportSummary transport_summary(const EventStore& store, const std::string& vantage,
                                   ExecMode mode = ExecMode::parallel);
RankedDistribution top_k_ports(const EventStore& store, const std::string& vantage, size_t k,
                               ExecMode mode = ExecMode::parallel);
RankedDistribution all_ports_ranked(const EventStore& store, const std::string& vantage,
                                    ExecMode mode = ExecMode::parallel);
AsTally attacks_per_as(const EventStore& store, const std::string& vantage, const AsnDb& db,
                       ExecMode mode = ExecMode::parallel);
AsTally attackers_per_as(const EventStore& store, const std::string& vantage, const AsnDb& db,
                         ExecMode mode = ExecMode::parallel);
HourlySeries hourly_rate(const EventStore& store, const std::string& vantage,
                         ExecMode mode = ExecMode::parallel);

// Port labels as used in the report tables (1433/3306 are both tagged
// MSSQL, 445 is "MS AD"); unlisted ports are blank.
const char* service_label(uint16_t port);

// Sorts (key, count) pairs into ranking order.
RankedDistribution rank(std::vector<RankedEntry> entries);

namespace serial {
TransportSummary transport_summary(const EventStore&, uint16_t vidx);
RankedDistribution all_ports_ranked(const EventStore&, uint16_t vidx);
AsTally attacks_per_as(const EventStore&, uint16_t vidx, const AsnDb&);
AsTally attackers_per_as(const EventStore&, uint16_t vidx, const AsnDb&);
HourlySeries hourly_rate(const EventStore&, uint16_t vidx);
} // namespace serial

namespace parallel {
TransportSummary transport_summary(const EventStore&, uint16_t vidx);
RankedDistribution all_ports_ranked(const EventStore&, uint16_t vidx);
AsTally attacks_per_as(const EventStore&, uint16_t vidx, const AsnDb&);
AsTally attackers_per_as(const EventStore&, uint16_t vidx, const AsnDb&);
HourlySeries hourly_rate(const EventStore&, uint16_t vidx);
} // namespace parallel

} // namespace droidpot::analysis
