#include "core/flow.hpp"

namespace droidpot {

bool UdpFlowTable::touch(const FlowKey& key, TimestampMs now) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = last_seen_.find(key);
    bool fresh = it == last_seen_.end() || now - it->second > idle_window_ms_;
    last_seen_[key] = now;
    return fresh;
}

size_t UdpFlowTable::sweep(TimestampMs now) {
    std::lock_guard<std::mutex> lock(mu_);
    size_t dropped = 0;
    for (auto it = last_seen_.begin(); it != last_seen_.end();) {
        if (now - it->second > idle_window_ms_) {
            it = last_seen_.erase(it);
            dropped++;
        } else {
            ++it;
        }
    }
    return dropped;
}

size_t UdpFlowTable::active() const {
    std::lock_guard<std::mutex> lock(mu_);
    return last_seen_.size();
}

} // namespace droidpot
