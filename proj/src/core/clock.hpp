#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>

namespace droidpot {

// Milliseconds since the Unix epoch, UTC.
using TimestampMs = int64_t;

class Clock {
  public:
    virtual ~Clock() = default;
    virtual TimestampMs now_ms() const = 0;
};

class SystemClock final : public Clock {
  public:
    TimestampMs now_ms() const override;
    static SystemClock& instance();
};

// Test clock: starts at a fixed instant, advanced by hand.
class ManualClock final : public Clock {
  public:
    explicit ManualClock(TimestampMs start = 0) : now_(start) {}
    TimestampMs now_ms() const override { return now_.load(); }
    void set(TimestampMs t) { now_.store(t); }
    void advance_ms(TimestampMs delta) { now_.fetch_add(delta); }

  private:
    std::atomic<TimestampMs> now_;
};

// RFC 3339 UTC with millisecond precision: 2012-11-01T08:15:30.250Z
std::string format_rfc3339_ms(TimestampMs t);
std::optional<TimestampMs> parse_rfc3339_ms(const std::string& text);

} // namespace droidpot
