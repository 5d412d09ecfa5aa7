#pragma once

#include <optional>
#include <string>

#include "analysis/stats.hpp"

namespace droidpot::analysis {

struct ReportInputs {
    std::string vantage;
    TransportSummary transport;
    RankedDistribution top_ports;
    AsTally attacks_as;
    AsTally attackers_as;
    HourlySeries hourly;
    const AsnDb* db = nullptr; // names in summary.json; optional
    uint64_t events = 0;
    uint64_t excluded_dropped = 0;
    uint64_t malformed_skipped = 0;
    uint64_t duplicates_dropped = 0;
};

// Writes table1.txt, table2.txt, attacks_per_as.csv, attackers_per_as.csv,
// hourly.csv and summary.json into out_dir. Returns an error message on an
// unwritable output directory, nullopt on success.
std::optional<std::string> emit_report(const std::string& out_dir, const ReportInputs& in);

} // namespace droidpot::analysis
