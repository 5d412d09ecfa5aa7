#include "daemon/daemon.hpp"

#include <filesystem>

namespace droidpot {

namespace fs = std::filesystem;

// Directory skeleton of a rooted 4.x-era device plus the handful of
// emulated binaries; deployments normally point fs_manifest at the richer
// shipped manifest with decoy media.
const char* kBuiltinManifest = R"JSON({
  "version": "android-4.0-builtin",
  "entries": [
    {"path": "/system", "kind": "dir"},
    {"path": "/system/app", "kind": "dir"},
    {"path": "/system/bin/sh", "kind": "file", "mode": "0755"},
    {"path": "/system/bin/ls", "kind": "file", "mode": "0755"},
    {"path": "/system/bin/ps", "kind": "file", "mode": "0755"},
    {"path": "/system/bin/cat", "kind": "file", "mode": "0755"},
    {"path": "/system/bin/id", "kind": "file", "mode": "0755"},
    {"path": "/data/data", "kind": "dir"},
    {"path": "/data/local", "kind": "dir"},
    {"path": "/sdcard/DCIM", "kind": "dir"},
    {"path": "/mnt/sdcard", "kind": "dir"},
    {"path": "/proc/cpuinfo", "kind": "file",
     "content_b64": "UHJvY2Vzc29yCTogQVJNdjcgUHJvY2Vzc29yIHJldiAyICh2N2wpCkJvZ29NSVBTCTogOTk2LjE0CkZlYXR1cmVzCTogc3dwIGhhbGYgdGh1bWIgZmFzdG11bHQgdmZwIGVkc3AgbmVvbiB2ZnB2MwpIYXJkd2FyZQk6IGhlcnJpbmcK"},
    {"path": "/proc/version", "kind": "file",
     "content_b64": "TGludXggdmVyc2lvbiAyLjYuMzIuOSAoYW5kcm9pZC1idWlsZEBhcGEyNikgKGdjYyB2ZXJzaW9uIDQuNC4wIChHQ0MpICkgIzEgU01QIFBSRUVNUFQgVGh1IEphbiA1IDEyOjA0OjIxIFVUQyAyMDEyCg=="},
    {"path": "/etc/hostname", "kind": "file", "content_b64": "YW5kcm9pZAo="},
    {"path": "/bin", "kind": "dir"},
    {"path": "/usr", "kind": "dir"},
    {"path": "/var", "kind": "dir"},
    {"path": "/tmp", "kind": "dir"},
    {"path": "/root", "kind": "dir"},
    {"path": "/home", "kind": "dir"}
  ]
})JSON";

Daemon::Daemon(config::DaemonConfig config, Clock& clock)
    : config_(std::move(config)), clock_(clock) {}

Daemon::~Daemon() { stop(); }

bool Daemon::start(std::string* error, int* exit_code) {
    auto fail_config = [&](const std::string& msg) {
        if (error) *error = msg;
        if (exit_code) *exit_code = kExitConfig;
        return false;
    };

    std::error_code ec;
    fs::create_directories(config_.data_dir, ec);
    if (ec) return fail_config(config_.data_dir + ": " + ec.message());

    std::vector<std::string> exclusion_errors;
    auto exclusion = ExclusionSet::parse(config_.exclusion, &exclusion_errors);
    if (!exclusion) {
        std::string msg;
        for (const auto& e : exclusion_errors) msg += (msg.empty() ? "" : "; ") + e;
        return fail_config(msg);
    }

    sink_ = std::make_unique<EventSink>(config_.vantage, *exclusion, clock_);
    std::string err;
    if (!sink_->open((fs::path(config_.data_dir) / "events.ndjson").string(), &err))
        return fail_config(err);

    sessions_ = std::make_unique<SessionRegistry>(clock_);
    if (!sessions_->open_log((fs::path(config_.data_dir) / "transcripts.ndjson").string(), &err))
        return fail_config(err);
    if (!artifacts_.open((fs::path(config_.data_dir) / "artifacts").string(), &err))
        return fail_config(err);
    if (!request_log_.open((fs::path(config_.data_dir) / "requests.ndjson").string(), &err))
        return fail_config(err);
    if (!capture_log_.open((fs::path(config_.data_dir) / "captures.ndjson").string(), &err))
        return fail_config(err);

    vfs::ManifestError manifest_error;
    auto image = config_.fs_manifest.empty()
                     ? vfs::load_base_image(kBuiltinManifest, &manifest_error)
                     : vfs::load_base_image_file(config_.fs_manifest, &manifest_error);
    if (!image) return fail_config("fs-manifest: " + manifest_error.message);
    base_ = *image;

    switch (config_.fetch.mode) {
    case config::FetchConfig::Mode::off:
        fetcher_ = std::make_unique<DisabledFetcher>();
        break;
    case config::FetchConfig::Mode::live:
        fetcher_ = std::make_unique<LiveFetcher>(config_.fetch.allowlist);
        break;
    case config::FetchConfig::Mode::stub:
        if (config_.fetch.fixtures_path.empty()) {
            fetcher_ = std::make_unique<StubFetcher>(std::map<std::string, std::string>{});
        } else {
            auto stub = StubFetcher::from_file(config_.fetch.fixtures_path, &err);
            if (!stub) return fail_config(err);
            fetcher_ = std::move(stub);
        }
        break;
    }

    // Dedicated traps: all-or-nothing.
    std::vector<std::string> bind_failures;
    if (config_.shell.enabled) {
        shell::ShellTrapConfig sc;
        sc.bind_addr = config_.bind_addr;
        sc.port = config_.shell.port;
        sc.policy = config_.shell.policy;
        sc.interp.uname_banner = config_.shell.uname_banner;
        sc.interp.hostname = config_.shell.hostname;
        sc.idle_timeout_ms = config_.shell.idle_timeout_s * 1000;
        shell_ = std::make_unique<shell::ShellTrap>(sc, *sink_, *sessions_, artifacts_, base_,
                                                    *fetcher_, clock_);
        if (!shell_->start(&err)) bind_failures.push_back("shell: " + err);
    }
    if (config_.web.enabled) {
        web::WebTrapConfig wc;
        wc.bind_addr = config_.bind_addr;
        wc.port = config_.web.port;
        web_ = std::make_unique<web::WebTrap>(wc, *sink_, *sessions_, artifacts_, base_, clock_,
                                              &request_log_);
        if (!web_->start(&err)) bind_failures.push_back("web: " + err);
    }
    if (config_.ftp.enabled) {
        ftp::FtpTrapConfig fc;
        fc.bind_addr = config_.bind_addr;
        fc.port = config_.ftp.port;
        fc.pasv_min = config_.ftp.pasv_min;
        fc.pasv_max = config_.ftp.pasv_max;
        ftp_ = std::make_unique<ftp::FtpTrap>(fc, *sink_, *sessions_, artifacts_, clock_);
        if (!ftp_->start(&err)) bind_failures.push_back("ftp: " + err);
    }
    if (config_.tftp.enabled) {
        tftp::TftpTrapConfig tc;
        tc.bind_addr = config_.bind_addr;
        tc.port = config_.tftp.port;
        tftp_ = std::make_unique<tftp::TftpTrap>(tc, *sink_, artifacts_, clock_);
        if (!tftp_->start(&err)) bind_failures.push_back("tftp: " + err);
    }
    if (!bind_failures.empty()) {
        std::string msg = "listener bind failures:";
        for (const auto& f : bind_failures) msg += " [" + f + "]";
        stop();
        if (error) *error = msg;
        if (exit_code) *exit_code = kExitBind;
        return false;
    }

    // Catch-all trap: per-port soft failures.
    if (config_.port_trap.enabled) {
        porttrap::PortTrapConfig pc;
        pc.bind_addr = config_.bind_addr;
        pc.policy = config_.effective_trap_policy();
        port_trap_ =
            std::make_unique<porttrap::PortTrap>(pc, *sink_, artifacts_, clock_, &capture_log_);
        port_trap_->start(&trap_failures_);
    }

    if (config_.exporter.enabled) {
        exporter::ExporterConfig xc;
        xc.log_path = sink_->path();
        xc.spool_dir = config_.exporter.spool_dir.empty()
                           ? (fs::path(config_.data_dir) / "spool").string()
                           : config_.exporter.spool_dir;
        xc.vantage = config_.vantage.label();
        xc.collector_host = config_.exporter.collector_host;
        xc.collector_port = config_.exporter.collector_port;
        xc.interval_s = config_.exporter.interval_s;
        exporter_ = std::make_unique<exporter::Exporter>(xc, clock_);
        if (!exporter_->open(&err)) return fail_config(err);
        exporter_->start();
    }

    started_ = true;
    return true;
}

void Daemon::stop() {
    started_ = false;
    if (shell_) shell_->stop();
    if (web_) web_->stop();
    if (ftp_) ftp_->stop();
    if (tftp_) tftp_->stop();
    if (port_trap_) port_trap_->stop();
    if (sessions_) sessions_->close_all();
    if (exporter_) exporter_->stop();
    if (sink_) sink_->close();
}

uint16_t Daemon::shell_port() const { return shell_ ? shell_->port() : 0; }
uint16_t Daemon::web_port() const { return web_ ? web_->port() : 0; }
uint16_t Daemon::ftp_port() const { return ftp_ ? ftp_->port() : 0; }
uint16_t Daemon::tftp_port() const { return tftp_ ? tftp_->port() : 0; }

std::vector<uint16_t> Daemon::trap_tcp_ports() const {
    return port_trap_ ? port_trap_->bound_tcp_ports() : std::vector<uint16_t>{};
}

std::vector<uint16_t> Daemon::trap_udp_ports() const {
    return port_trap_ ? port_trap_->bound_udp_ports() : std::vector<uint16_t>{};
}

} // namespace droidpot
