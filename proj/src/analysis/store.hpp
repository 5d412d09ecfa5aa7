#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/ip.hpp"
#include "core/model.hpp"

namespace droidpot::analysis {

// Compact event row for the statistics kernels.
struct Row {
    uint64_t event_id = 0;
    TimestampMs ts = 0;
    IpAddr src_ip;
    uint16_t dst_port = 0;
    uint16_t vantage_idx = 0;
    Transport transport = Transport::tcp;
    Service service = Service::port_trap;
};

// Non-excluded events from one or more exporter-format logs, ordered by
// timestamp. Immutable after ingest.
struct EventStore {
    std::vector<Row> rows;
    std::vector<std::string> vantages; // interned labels, index = vantage_idx

    uint64_t excluded_dropped = 0;
    uint64_t malformed_skipped = 0;
    uint64_t duplicates_dropped = 0;

    std::optional<uint16_t> vantage_index(const std::string& label) const;
    size_t count_for(uint16_t vantage_idx) const;
};

struct IngestError {
    std::string message;
};

// Reads every path; malformed lines are counted and skipped, excluded
// events dropped, duplicates (same vantage + event id) dropped. Zero
// readable files is an error.
std::optional<EventStore> ingest(const std::vector<std::string>& paths, IngestError* error);

// Same, over in-memory lines (tests and the corpus generator).
EventStore ingest_lines(const std::vector<std::string>& lines);

} // namespace droidpot::analysis
