#include <doctest.h>

#include <random>

#include "test_util.hpp"
#include "traps/port_trap.hpp"

using namespace droidpot;
using namespace droidpot::porttrap;
using droidpot::test::FakeStream;

TEST_CASE("silent mode: blind send detected, nothing ever transmitted") {
    FakeStream stream(std::string(90, 'W'));
    ManualClock clock(0);
    PortPolicy policy; // silent
    auto capture = trap_connection_io(stream, policy, clock, 1000, 5000);
    CHECK(capture.total_bytes == 90);
    CHECK(capture.blind_send);
    CHECK(stream.written().empty());
}

TEST_CASE("silent mode: no payload, no blind send") {
    FakeStream stream("");
    ManualClock clock(0);
    PortPolicy policy;
    auto capture = trap_connection_io(stream, policy, clock, 1000, 5000);
    CHECK(capture.total_bytes == 0);
    CHECK_FALSE(capture.blind_send);
    CHECK(stream.written().empty());
}

TEST_CASE("banner mode speaks first; blind send never set") {
    FakeStream stream("EHLO x\r\n");
    ManualClock clock(0);
    PortPolicy policy;
    policy.mode = TrapMode::banner;
    policy.banner = "220 mail.localdomain ESMTP\r\n";
    auto capture = trap_connection_io(stream, policy, clock, 1000, 5000);
    CHECK(stream.written() == "220 mail.localdomain ESMTP\r\n");
    CHECK(capture.total_bytes == 8);
    CHECK_FALSE(capture.blind_send);
}

TEST_CASE("echo mode mirrors bytes and is never blind") {
    FakeStream stream("ping");
    ManualClock clock(0);
    PortPolicy policy;
    policy.mode = TrapMode::echo;
    auto capture = trap_connection_io(stream, policy, clock, 1000, 5000);
    CHECK(stream.written() == "ping");
    CHECK_FALSE(capture.blind_send);
}

TEST_CASE("capture truncates to the 64 KiB prefix but counts everything") {
    std::string big(kCaptureCap + 5000, 'x');
    for (size_t i = 0; i < big.size(); i++) big[i] = static_cast<char>('a' + (i % 26));
    FakeStream stream(big);
    ManualClock clock(0);
    PortPolicy policy;
    auto capture = trap_connection_io(stream, policy, clock, 1000, 5000);
    CHECK(capture.total_bytes == big.size());
    CHECK(capture.stored.size() == kCaptureCap);
    CHECK(capture.stored == big.substr(0, kCaptureCap)); // prefix preserved
    CHECK(stream.written().empty());
}

// Property: across random inputs and modes, silent sockets never write.
TEST_CASE("silence property under random payloads") {
    std::mt19937_64 rng(53);
    for (int i = 0; i < 100; i++) {
        std::string payload;
        size_t len = rng() % 3000;
        for (size_t k = 0; k < len; k++) payload.push_back(static_cast<char>(rng() & 0xFF));
        FakeStream stream(payload);
        ManualClock clock(0);
        PortPolicy policy; // silent
        auto capture = trap_connection_io(stream, policy, clock, 500, 2000);
        CHECK(stream.written().empty());
        CHECK(capture.total_bytes == payload.size());
        CHECK(capture.blind_send == (payload.size() > 0));
        CHECK(capture.stored == payload.substr(0, kCaptureCap));
    }
}
