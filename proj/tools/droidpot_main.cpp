#include <glob.h>
#include <signal.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "analysis/asn.hpp"
#include "analysis/report.hpp"
#include "analysis/stats.hpp"
#include "analysis/store.hpp"
#include "config/config.hpp"
#include "daemon/daemon.hpp"
#include "exporter/collector.hpp"
#include "sim/corpus.hpp"
#include "sim/script.hpp"
#include "vfs/image.hpp"
#include "vfs/overlay.hpp"

namespace {

std::atomic<int> g_signal{0};

void handle_signal(int sig) { g_signal.store(sig); }

void install_signal_handlers() {
    struct sigaction sa{};
    sa.sa_handler = handle_signal;
    sigaction(SIGTERM, &sa, nullptr);
    sigaction(SIGINT, &sa, nullptr);
}

std::vector<std::string> expand_globs(const std::vector<std::string>& patterns) {
    std::vector<std::string> out;
    for (const auto& pattern : patterns) {
        glob_t g{};
        if (glob(pattern.c_str(), GLOB_NOSORT, nullptr, &g) == 0) {
            for (size_t i = 0; i < g.gl_pathc; i++) out.emplace_back(g.gl_pathv[i]);
        } else {
            out.push_back(pattern); // let ingest report unreadable paths
        }
        globfree(&g);
    }
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_run(const std::string& config_path) {
    std::string path = config_path;
    if (path.empty()) {
        const char* env = std::getenv("DROIDPOT_CONFIG");
        if (env) path = env;
    }
    if (path.empty()) {
        std::cerr << "droidpot run: no config given (use --config or DROIDPOT_CONFIG)\n";
        return droidpot::Daemon::kExitConfig;
    }
    droidpot::config::ConfigError cfg_error;
    auto cfg = droidpot::config::load_config(path, &cfg_error);
    if (!cfg) {
        std::cerr << "droidpot run: config errors:\n";
        for (const auto& p : cfg_error.problems) std::cerr << "  - " << p << "\n";
        return droidpot::Daemon::kExitConfig;
    }

    // handlers first: a SIGTERM during startup must still shut down cleanly
    install_signal_handlers();

    droidpot::Daemon daemon(*cfg);
    std::string error;
    int exit_code = 0;
    if (!daemon.start(&error, &exit_code)) {
        std::cerr << "droidpot run: " << error << "\n";
        return exit_code;
    }
    for (const auto& f : daemon.trap_port_failures())
        std::cerr << "droidpot run: trap port unavailable: " << f << "\n";

    std::cout << "droidpot: vantage " << cfg->vantage.label() << ", data in "
              << daemon.data_dir() << "\n";
    if (daemon.shell_port()) std::cout << "droidpot: shell trap on tcp/" << daemon.shell_port() << "\n";
    if (daemon.web_port()) std::cout << "droidpot: web trap on tcp/" << daemon.web_port() << "\n";
    if (daemon.ftp_port()) std::cout << "droidpot: ftp trap on tcp/" << daemon.ftp_port() << "\n";
    if (daemon.tftp_port()) std::cout << "droidpot: tftp trap on udp/" << daemon.tftp_port() << "\n";
    std::cout << "droidpot: ready" << std::endl;

    while (g_signal.load() == 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));

    std::cout << "droidpot: signal " << g_signal.load() << ", shutting down\n";
    daemon.stop();
    return 0;
}

int cmd_collector(const std::string& listen, const std::string& out_dir) {
    auto colon = listen.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "droidpot collector: --listen must be ip:port\n";
        return 2;
    }
    droidpot::exporter::CollectorConfig cfg;
    cfg.bind_addr = listen.substr(0, colon);
    cfg.port = static_cast<uint16_t>(std::atoi(listen.c_str() + colon + 1));
    cfg.out_dir = out_dir;

    install_signal_handlers();
    droidpot::exporter::Collector collector(cfg);
    std::string error;
    if (!collector.start(&error)) {
        std::cerr << "droidpot collector: " << error << "\n";
        return 3;
    }
    std::cout << "droidpot collector: listening on " << listen << ", archiving to " << out_dir
              << std::endl;
    while (g_signal.load() == 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    collector.stop();
    std::cout << "droidpot collector: " << collector.batches_acked() << " batches acked, "
              << collector.batches_nacked() << " nacked\n";
    return 0;
}

int cmd_analyze(const std::vector<std::string>& log_patterns, const std::string& asn_db_path,
                const std::string& vantage, const std::string& out_dir, size_t top_k,
                bool serial) {
    using namespace droidpot::analysis;
    auto mode = serial ? ExecMode::serial : ExecMode::parallel;

    auto paths = expand_globs(log_patterns);
    IngestError ingest_error;
    auto store = ingest(paths, &ingest_error);
    if (!store) {
        std::cerr << "droidpot analyze: " << ingest_error.message << "\n";
        return 2;
    }

    AsnDb db;
    if (!asn_db_path.empty()) {
        std::string error;
        auto loaded = AsnDb::load_file(asn_db_path, &error);
        if (!loaded) {
            std::cerr << "droidpot analyze: " << error << "\n";
            return 2;
        }
        db = std::move(*loaded);
    }

    if (!store->vantage_index(vantage))
        std::cerr << "droidpot analyze: no events for vantage \"" << vantage
                  << "\"; emitting empty report\n";

    ReportInputs in;
    in.vantage = vantage;
    in.transport = transport_summary(*store, vantage, mode);
    in.top_ports = top_k_ports(*store, vantage, top_k, mode);
    in.attacks_as = attacks_per_as(*store, vantage, db, mode);
    in.attackers_as = attackers_per_as(*store, vantage, db, mode);
    in.hourly = hourly_rate(*store, vantage, mode);
    in.db = &db;
    in.events = in.transport.tcp.attacks + in.transport.udp.attacks;
    in.excluded_dropped = store->excluded_dropped;
    in.malformed_skipped = store->malformed_skipped;
    in.duplicates_dropped = store->duplicates_dropped;

    auto error = emit_report(out_dir, in);
    if (error) {
        std::cerr << "droidpot analyze: " << *error << "\n";
        return 1;
    }
    std::cout << "droidpot analyze: " << in.events << " events for " << vantage << " ("
              << store->excluded_dropped << " excluded, " << store->malformed_skipped
              << " malformed, " << store->duplicates_dropped << " duplicate) -> " << out_dir
              << "\n";
    return 0;
}

int cmd_sim_gen(const std::string& spec_path, const std::string& out_dir) {
    std::string error;
    auto spec = droidpot::sim::CorpusSpec::from_file(spec_path, &error);
    if (!spec) {
        std::cerr << "droidpot sim gen: " << error << "\n";
        return 2;
    }
    auto corpus = droidpot::sim::generate_corpus(*spec, &error);
    if (!corpus) {
        std::cerr << "droidpot sim gen: " << error << "\n";
        return 2;
    }
    if (!droidpot::sim::write_corpus(*corpus, out_dir, &error)) {
        std::cerr << "droidpot sim gen: " << error << "\n";
        return 1;
    }
    for (const auto& v : corpus->vantages)
        std::cout << "droidpot sim gen: " << v.label << ": " << v.lines.size() << " events\n";
    std::cout << "droidpot sim gen: wrote corpus + ground_truth.json to " << out_dir << "\n";
    return 0;
}

int cmd_sim_run(const std::string& script_path, const std::string& target,
                const std::string& daemon_dir) {
    std::string error;
    auto script = droidpot::sim::AttackScript::from_file(script_path, &error);
    if (!script) {
        std::cerr << "droidpot sim run: " << error << "\n";
        return 2;
    }
    auto result = droidpot::sim::run_script(*script, target, daemon_dir);
    if (result.pass) {
        std::cout << "droidpot sim run: " << script->name << ": PASS\n";
        return 0;
    }
    std::cout << "droidpot sim run: " << script->name << ": FAIL: " << result.failure << "\n";
    if (!result.diff.empty()) std::cout << result.diff;
    return 1;
}

int cmd_manifest_validate(const std::string& path) {
    droidpot::vfs::ManifestError error;
    auto image = droidpot::vfs::load_base_image_file(path, &error);
    if (!image) {
        std::cerr << "fs-manifest: " << error.message << "\n";
        return 1;
    }
    static const char* kSkeleton[] = {
        "/system", "/system/bin", "/system/app", "/data",       "/data/data", "/data/local",
        "/sdcard", "/sdcard/DCIM", "/proc",      "/etc",        "/mnt/sdcard", "/bin",
        "/usr",    "/var",         "/tmp",       "/root",       "/home"};
    // symlinked directories (e.g. /mnt/sdcard -> /sdcard) satisfy the skeleton
    droidpot::vfs::OverlayFs view(*image);
    std::vector<std::string> missing;
    for (const char* p : kSkeleton) {
        auto resolved = view.resolve(p);
        if (!resolved.ok() || resolved.node.kind != droidpot::vfs::FsNode::Kind::dir)
            missing.emplace_back(p);
    }
    std::cout << "fs-manifest: version " << (*image)->manifest_version << ", "
              << (*image)->exec_whitelist.size() << " emulated binaries\n";
    if (!missing.empty()) {
        std::cerr << "fs-manifest: missing skeleton directories:\n";
        for (const auto& m : missing) std::cerr << "  - " << m << "\n";
        return 1;
    }
    std::cout << "fs-manifest: ok\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"droidpot - mobile-device honeypot probe and analysis toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the honeypot daemon");
    run->add_option("--config,-c", config_path, "Config JSON path (or env DROIDPOT_CONFIG)");

    std::string listen = "127.0.0.1:7007";
    std::string collector_out = "collector-data";
    auto* collector = app.add_subcommand("collector", "Run the log collector stub");
    collector->add_option("--listen", listen, "ip:port to listen on");
    collector->add_option("--out", collector_out, "archive directory");

    std::vector<std::string> log_patterns;
    std::string asn_db_path, vantage, analyze_out = "report";
    size_t top_k = 10;
    bool serial = false;
    auto* analyze = app.add_subcommand("analyze", "Offline analysis of event logs");
    analyze->add_option("--logs", log_patterns, "event log files/globs")->required();
    analyze->add_option("--asn-db", asn_db_path, "prefix->ASN snapshot file");
    analyze->add_option("--vantage", vantage, "vantage label to analyze")->required();
    analyze->add_option("--out", analyze_out, "output directory");
    analyze->add_option("--top-k", top_k, "port ranking depth");
    analyze->add_flag("--serial", serial, "use the serial reference kernels");

    auto* sim = app.add_subcommand("sim", "Attacker simulation");
    sim->require_subcommand(1);
    std::string script_path, target = "127.0.0.1", daemon_dir;
    auto* sim_run = sim->add_subcommand("run", "Run a scripted attack against a daemon");
    sim_run->add_option("--script", script_path, "script JSON")->required();
    sim_run->add_option("--target", target, "daemon address");
    sim_run->add_option("--daemon-dir", daemon_dir,
                        "daemon data dir for transcript/capture checks");
    std::string spec_path, gen_out = "corpus";
    auto* sim_gen = sim->add_subcommand("gen", "Generate a synthetic corpus with ground truth");
    sim_gen->add_option("--spec", spec_path, "corpus spec JSON")->required();
    sim_gen->add_option("--out", gen_out, "output directory");

    auto* manifest = app.add_subcommand("fs-manifest", "Filesystem manifest tools");
    manifest->require_subcommand(1);
    std::string manifest_path;
    auto* validate = manifest->add_subcommand("validate", "Validate a manifest document");
    validate->add_option("path", manifest_path, "manifest JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (run->parsed()) return cmd_run(config_path);
    if (collector->parsed()) return cmd_collector(listen, collector_out);
    if (analyze->parsed())
        return cmd_analyze(log_patterns, asn_db_path, vantage, analyze_out, top_k, serial);
    if (sim->parsed() && sim_run->parsed()) return cmd_sim_run(script_path, target, daemon_dir);
    if (sim->parsed() && sim_gen->parsed()) return cmd_sim_gen(spec_path, gen_out);
    if (manifest->parsed() && validate->parsed()) return cmd_manifest_validate(manifest_path);
    return 2;
}
