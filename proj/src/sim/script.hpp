#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "core/model.hpp"

namespace droidpot::sim {

// One scripted attacker: deterministic socket steps plus expectations
// checked against the daemon's own records afterwards.
struct ScriptStep {
    enum class Op : uint8_t { connect, send, send_bytes, expect, sleep, close };
    Op op = Op::sleep;
    Transport transport = Transport::tcp; // connect
    uint16_t port = 0;                    // connect
    std::string data;                     // send line / raw bytes / expect pattern
    int timeout_ms = 5000;                // expect
    int ms = 0;                           // sleep
};

struct ExpectedTranscript {
    std::vector<std::array<std::string, 3>> logins;   // user, password, outcome
    std::vector<TranscriptCommand> commands;          // input, output, status
    std::vector<std::string> artifacts;               // sha-256 digests
    bool check_logins = false;
    bool check_commands = false;
    bool check_artifacts = false;
};

struct AttackScript {
    std::string name;
    std::vector<ScriptStep> steps;

    // Post-run expectations (all optional)
    std::string final_output_contains;
    std::optional<ExpectedTranscript> transcript;
    std::optional<bool> capture_blind_send; // checked against captures log
    std::optional<int> expected_command_count;

    static std::optional<AttackScript> from_json(const std::string& text, std::string* error);
    static std::optional<AttackScript> from_file(const std::string& path, std::string* error);
};

struct ScriptResult {
    bool pass = false;
    std::string failure;     // first failed check
    std::string received;    // all bytes read from the daemon
    std::string diff;        // transcript mismatch detail
};

// Runs the steps over real sockets against target_host. When daemon_dir is
// given, the daemon's transcripts.ndjson / captures.ndjson are polled for
// the session this run produced and checked against the expectations.
ScriptResult run_script(const AttackScript& script, const std::string& target_host,
                        const std::string& daemon_dir = "");

} // namespace droidpot::sim
