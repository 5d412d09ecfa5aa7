#pragma once

#include <memory>
#include <string>
#include <vector>

#include "config/config.hpp"
#include "core/artifacts.hpp"
#include "core/ndjson_log.hpp"
#include "core/session.hpp"
#include "core/sink.hpp"
#include "exporter/exporter.hpp"
#include "traps/fetcher.hpp"
#include "traps/ftp_trap.hpp"
#include "traps/port_trap.hpp"
#include "traps/shell_trap.hpp"
#include "traps/tftp_trap.hpp"
#include "traps/web_trap.hpp"
#include "vfs/image.hpp"

namespace droidpot {

// One deployable probe: every enabled trap, the shared sink/stores, and the
// exporter. A failing port-trap port is reported and skipped; a failing
// dedicated service aborts startup.
class Daemon {
  public:
    static constexpr int kExitConfig = 2;
    static constexpr int kExitBind = 3;

    explicit Daemon(config::DaemonConfig config, Clock& clock = SystemClock::instance());
    ~Daemon();

    // On failure fills *error and *exit_code (kExitConfig or kExitBind).
    bool start(std::string* error, int* exit_code);
    // Graceful: stops traps, closes open transcripts, seals a final batch.
    void stop();

    const std::string& data_dir() const { return config_.data_dir; }
    uint16_t shell_port() const;
    uint16_t web_port() const;
    uint16_t ftp_port() const;
    uint16_t tftp_port() const;
    std::vector<uint16_t> trap_tcp_ports() const;
    std::vector<uint16_t> trap_udp_ports() const;
    const std::vector<std::string>& trap_port_failures() const { return trap_failures_; }
    EventSink& sink() { return *sink_; }
    SessionRegistry& sessions() { return *sessions_; }

  private:
    config::DaemonConfig config_;
    Clock& clock_;
    bool started_ = false;

    std::unique_ptr<EventSink> sink_;
    std::unique_ptr<SessionRegistry> sessions_;
    ArtifactStore artifacts_;
    std::shared_ptr<const vfs::FsImage> base_;
    std::unique_ptr<Fetcher> fetcher_;
    NdjsonLog request_log_;
    NdjsonLog capture_log_;

    std::unique_ptr<shell::ShellTrap> shell_;
    std::unique_ptr<web::WebTrap> web_;
    std::unique_ptr<ftp::FtpTrap> ftp_;
    std::unique_ptr<tftp::TftpTrap> tftp_;
    std::unique_ptr<porttrap::PortTrap> port_trap_;
    std::unique_ptr<exporter::Exporter> exporter_;
    std::vector<std::string> trap_failures_;
};

// Minimal built-in base image used when no fs_manifest is configured.
extern const char* kBuiltinManifest;

} // namespace droidpot
