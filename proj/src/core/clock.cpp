#include "core/clock.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

namespace droidpot {

TimestampMs SystemClock::now_ms() const {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

SystemClock& SystemClock::instance() {
    static SystemClock clock;
    return clock;
}

std::string format_rfc3339_ms(TimestampMs t) {
    time_t secs = static_cast<time_t>(t / 1000);
    int ms = static_cast<int>(t % 1000);
    if (ms < 0) { // floor division for pre-epoch instants
        ms += 1000;
        secs -= 1;
    }
    tm parts{};
    gmtime_r(&secs, &parts);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", parts.tm_year + 1900,
                  parts.tm_mon + 1, parts.tm_mday, parts.tm_hour, parts.tm_min, parts.tm_sec, ms);
    return buf;
}

std::optional<TimestampMs> parse_rfc3339_ms(const std::string& text) {
    int year, mon, day, hour, min, sec, ms = 0;
    char zone = 0;
    int n = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3d%c", &year, &mon, &day, &hour,
                        &min, &sec, &ms, &zone);
    if (n < 6) return std::nullopt;
    if (n == 7 && ms >= 0) {
        // "....sssZ" consumed ms but not zone; re-scan tail for Z
        if (text.empty() || (text.back() != 'Z' && text.back() != 'z')) return std::nullopt;
    } else if (n == 8) {
        if (zone != 'Z' && zone != 'z') return std::nullopt;
    } else {
        // no fractional part: require trailing Z
        if (text.empty() || (text.back() != 'Z' && text.back() != 'z')) return std::nullopt;
        ms = 0;
    }
    tm parts{};
    parts.tm_year = year - 1900;
    parts.tm_mon = mon - 1;
    parts.tm_mday = day;
    parts.tm_hour = hour;
    parts.tm_min = min;
    parts.tm_sec = sec;
    time_t secs = timegm(&parts);
    if (secs == -1) return std::nullopt;
    return static_cast<TimestampMs>(secs) * 1000 + ms;
}

} // namespace droidpot
