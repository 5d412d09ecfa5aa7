#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/artifacts.hpp"
#include "core/clock.hpp"
#include "core/session.hpp"
#include "traps/fetcher.hpp"
#include "vfs/overlay.hpp"

namespace droidpot::shell {

struct InterpreterConfig {
    // Full `uname -a` line; also the source for uname -r/-m fields.
    std::string uname_banner =
        "Linux localhost 2.6.32.9 #1 SMP PREEMPT Thu Jan 5 12:04:21 UTC 2012 armv7l GNU/Linux";
    std::string hostname = "android";
    std::string home = "/root";
};

struct CommandResult {
    std::string output;
    int exit_status = 0;
    bool exit_requested = false;
};

// Emulated root shell over a per-session overlay. Commands outside the
// emulated set fail with "command not found"; running anything the session
// itself created is refused through exec_check.
class ShellInterpreter {
  public:
    static constexpr size_t kMaxLine = 8192;

    ShellInterpreter(vfs::OverlayFs& fs, ArtifactStore& artifacts, Fetcher& fetcher,
                     InterpreterConfig config, Clock& clock,
                     std::shared_ptr<SessionHandle> transcript = nullptr);

    // Interprets one input line (";" and "&&" sequences included) and
    // appends (line, output, status) to the transcript.
    CommandResult interpret(const std::string& line);

    std::string prompt() const;

  private:
    struct Invocation {
        std::vector<std::string> argv;
        std::string redirect_path; // empty = none
        bool redirect_append = false;
    };

    CommandResult run_single(const std::string& segment);
    CommandResult dispatch(const Invocation& inv);
    CommandResult run_builtin(const std::string& name, const std::vector<std::string>& argv);
    CommandResult exec_path(const std::vector<std::string>& argv);

    CommandResult cmd_ls(const std::vector<std::string>& argv);
    CommandResult cmd_cd(const std::vector<std::string>& argv);
    CommandResult cmd_cat(const std::vector<std::string>& argv);
    CommandResult cmd_echo(const std::vector<std::string>& argv);
    CommandResult cmd_uname(const std::vector<std::string>& argv);
    CommandResult cmd_ps(const std::vector<std::string>& argv);
    CommandResult cmd_mkdir(const std::vector<std::string>& argv);
    CommandResult cmd_rm(const std::vector<std::string>& argv);
    CommandResult cmd_cp_mv(const std::vector<std::string>& argv, bool move);
    CommandResult cmd_chmod(const std::vector<std::string>& argv);
    CommandResult cmd_touch(const std::vector<std::string>& argv);
    CommandResult cmd_download(const std::vector<std::string>& argv, bool curl_style);
    CommandResult cmd_tar(const std::vector<std::string>& argv);
    CommandResult cmd_unzip(const std::vector<std::string>& argv);
    CommandResult cmd_history(const std::vector<std::string>& argv);

    vfs::OverlayFs& fs_;
    ArtifactStore& artifacts_;
    Fetcher& fetcher_;
    InterpreterConfig config_;
    Clock& clock_;
    std::shared_ptr<SessionHandle> transcript_;
    std::vector<std::string> history_;
};

std::vector<std::string> tokenize_command(const std::string& text);

} // namespace droidpot::shell
