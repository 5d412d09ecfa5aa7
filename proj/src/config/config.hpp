#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "traps/port_trap.hpp"
#include "traps/shell_trap.hpp"

namespace droidpot::config {

struct ShellConfig {
    bool enabled = true;
    uint16_t port = 2222;
    shell::CredentialPolicy policy;
    std::string uname_banner =
        "Linux localhost 2.6.32.9 #1 SMP PREEMPT Thu Jan 5 12:04:21 UTC 2012 armv7l GNU/Linux";
    std::string hostname = "android";
    int idle_timeout_s = 300;
};

struct WebConfig {
    bool enabled = true;
    uint16_t port = 8080;
};

struct FtpConfig {
    bool enabled = true;
    uint16_t port = 2121;
    uint16_t pasv_min = 0;
    uint16_t pasv_max = 0;
};

struct TftpConfig {
    bool enabled = true;
    uint16_t port = 6969;
};

struct PortTrapSection {
    bool enabled = true;
    // Empty lists mean "use the default trap set minus dedicated ports".
    std::vector<uint16_t> tcp_ports;
    std::vector<uint16_t> udp_ports;
    bool use_defaults = true;
    std::map<std::string, porttrap::PortPolicy> modes; // key "tcp/25" or "udp/53"
};

struct FetchConfig {
    enum class Mode : uint8_t { stub, live, off };
    Mode mode = Mode::stub;
    std::string fixtures_path; // stub mode
    std::vector<std::string> allowlist; // live mode hosts
};

struct ExporterSection {
    bool enabled = true;
    std::string collector_host = "127.0.0.1";
    uint16_t collector_port = 7007;
    int interval_s = 300;
    std::string spool_dir; // default: <data_dir>/spool
};

struct DaemonConfig {
    Vantage vantage;
    std::string bind_addr = "0.0.0.0";
    std::string data_dir = "droidpot-data";
    std::vector<std::string> exclusion;
    std::string fs_manifest; // empty = built-in minimal image
    ShellConfig shell;
    WebConfig web;
    FtpConfig ftp;
    TftpConfig tftp;
    PortTrapSection port_trap;
    FetchConfig fetch;
    ExporterSection exporter;

    // Default trap set (observed top ports) minus ports claimed by enabled
    // dedicated services.
    porttrap::TrapPolicy effective_trap_policy() const;
};

struct ConfigError {
    std::vector<std::string> problems; // every problem, not just the first
    std::string join() const;
};

// Strict parse + validation; reports all problems at once.
std::optional<DaemonConfig> load_config_text(const std::string& json_text, ConfigError* error);
std::optional<DaemonConfig> load_config(const std::string& path, ConfigError* error);

} // namespace droidpot::config
