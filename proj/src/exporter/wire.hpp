#pragma once

#include <optional>
#include <string>

#include "core/model.hpp"

namespace droidpot::wire {

// One event per line, UTF-8, fixed key order:
//   id, ts, vantage, proto, src_ip, src_port, dst_port, service, session,
//   bytes, excluded
// ts is RFC 3339 UTC with milliseconds; IPv6 sources are written in
// bracket-free canonical lowercase form. No trailing newline.
std::string serialize_event(const AttackEvent& event);

// Inverse of serialize_event; tolerant of key order, strict about content.
std::optional<AttackEvent> parse_event(const std::string& line);

} // namespace droidpot::wire
