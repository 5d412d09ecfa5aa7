#pragma once

#include <cstdint>
#include <mutex>
#include <unordered_map>

#include "core/clock.hpp"
#include "core/ip.hpp"

namespace droidpot {

struct FlowKey {
    IpAddr src_ip;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;

    bool operator==(const FlowKey& o) const {
        return src_port == o.src_port && dst_port == o.dst_port && src_ip == o.src_ip;
    }
};

struct FlowKeyHash {
    size_t operator()(const FlowKey& k) const {
        return IpAddrHash{}(k.src_ip) * 131 + k.src_port * 7 + k.dst_port;
    }
};

// UDP has no connect, so "one event per connection" becomes one event per
// new 5-tuple flow within an idle window (default 60 s).
class UdpFlowTable {
  public:
    explicit UdpFlowTable(TimestampMs idle_window_ms = 60'000)
        : idle_window_ms_(idle_window_ms) {}

    // Records a datagram; returns true when it starts a new flow.
    bool touch(const FlowKey& key, TimestampMs now);
    // Drops entries idle past the window; returns how many were dropped.
    size_t sweep(TimestampMs now);
    size_t active() const;

  private:
    TimestampMs idle_window_ms_;
    mutable std::mutex mu_;
    std::unordered_map<FlowKey, TimestampMs, FlowKeyHash> last_seen_;
};

} // namespace droidpot
