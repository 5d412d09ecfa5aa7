#include "traps/interpreter.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>

namespace droidpot::shell {

namespace {

std::string perm_string(vfs::FsNode::Kind kind, uint32_t mode) {
    std::string s;
    s += kind == vfs::FsNode::Kind::dir ? 'd' : kind == vfs::FsNode::Kind::symlink ? 'l' : '-';
    const char* bits = "rwxrwxrwx";
    for (int i = 0; i < 9; i++) s += (mode & (1u << (8 - i))) ? bits[i] : '-';
    return s;
}

std::string mtime_string(TimestampMs t) {
    time_t secs = static_cast<time_t>(t / 1000);
    tm parts{};
    gmtime_r(&secs, &parts);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d", parts.tm_year + 1900,
                  parts.tm_mon + 1, parts.tm_mday, parts.tm_hour, parts.tm_min);
    return buf;
}

bool is_path_token(const std::string& t) {
    return t.find('/') != std::string::npos;
}

// Splits a line into ";" / "&&" separated segments, quote-aware.
std::vector<std::pair<std::string, bool>> split_segments(const std::string& line) {
    std::vector<std::pair<std::string, bool>> out; // (segment, preceded_by_and)
    std::string cur;
    bool next_is_and = false;
    char quote = 0;
    for (size_t i = 0; i < line.size(); i++) {
        char c = line[i];
        if (quote) {
            cur += c;
            if (c == quote) quote = 0;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            cur += c;
            continue;
        }
        if (c == ';') {
            out.emplace_back(cur, next_is_and);
            cur.clear();
            next_is_and = false;
            continue;
        }
        if (c == '&' && i + 1 < line.size() && line[i + 1] == '&') {
            out.emplace_back(cur, next_is_and);
            cur.clear();
            next_is_and = true;
            i++;
            continue;
        }
        cur += c;
    }
    out.emplace_back(cur, next_is_and);
    return out;
}

} // namespace

std::vector<std::string> tokenize_command(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    bool in_token = false;
    char quote = 0;
    for (char c : text) {
        if (quote) {
            if (c == quote)
                quote = 0;
            else
                cur += c;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            in_token = true;
            continue;
        }
        if (c == ' ' || c == '\t') {
            if (in_token) {
                out.push_back(cur);
                cur.clear();
                in_token = false;
            }
            continue;
        }
        cur += c;
        in_token = true;
    }
    if (in_token) out.push_back(cur);
    return out;
}

ShellInterpreter::ShellInterpreter(vfs::OverlayFs& fs, ArtifactStore& artifacts, Fetcher& fetcher,
                                   InterpreterConfig config, Clock& clock,
                                   std::shared_ptr<SessionHandle> transcript)
    : fs_(fs), artifacts_(artifacts), fetcher_(fetcher), config_(std::move(config)),
      clock_(clock), transcript_(std::move(transcript)) {
    fs_.set_clock(&clock_);
}

std::string ShellInterpreter::prompt() const {
    return "root@" + config_.hostname + ":" + fs_.cwd() + " # ";
}

CommandResult ShellInterpreter::interpret(const std::string& raw_line) {
    std::string line = raw_line;
    if (line.size() > kMaxLine) line.resize(kMaxLine);
    history_.push_back(line);

    CommandResult combined;
    bool last_failed = false;
    for (auto& [segment, preceded_by_and] : split_segments(line)) {
        if (preceded_by_and && last_failed) continue;
        CommandResult r = run_single(segment);
        if (!r.output.empty()) {
            if (!combined.output.empty() && combined.output.back() != '\n')
                combined.output += "\n";
            combined.output += r.output;
        }
        combined.exit_status = r.exit_status;
        combined.exit_requested = combined.exit_requested || r.exit_requested;
        last_failed = r.exit_status != 0;
        if (r.exit_requested) break;
    }
    if (transcript_) transcript_->record_command(line, combined.output, combined.exit_status);
    return combined;
}

CommandResult ShellInterpreter::run_single(const std::string& segment) {
    Invocation inv;
    auto tokens = tokenize_command(segment);
    if (tokens.empty()) return {};

    for (size_t i = 0; i < tokens.size(); i++) {
        if ((tokens[i] == ">" || tokens[i] == ">>") && i + 1 < tokens.size()) {
            inv.redirect_path = tokens[i + 1];
            inv.redirect_append = tokens[i] == ">>";
            i++;
            continue;
        }
        inv.argv.push_back(tokens[i]);
    }
    if (inv.argv.empty()) return {};
    return dispatch(inv);
}

CommandResult ShellInterpreter::dispatch(const Invocation& inv) {
    CommandResult r;
    if (is_path_token(inv.argv[0]) || inv.argv[0].rfind("./", 0) == 0)
        r = exec_path(inv.argv);
    else
        r = run_builtin(inv.argv[0], inv.argv);

    if (!inv.redirect_path.empty()) {
        std::string data = r.output;
        if (!data.empty() && data.back() != '\n') data += "\n";
        vfs::FsError e = inv.redirect_append ? fs_.append_file(inv.redirect_path, data)
                                             : fs_.write_file(inv.redirect_path, data);
        if (e != vfs::FsError::none) {
            r.output = "sh: cannot create " + inv.redirect_path + ": " + vfs::to_string(e);
            r.exit_status = 1;
        } else {
            r.output.clear();
        }
    }
    return r;
}

CommandResult ShellInterpreter::exec_path(const std::vector<std::string>& argv) {
    const std::string& path = argv[0];
    auto resolved = fs_.resolve(path);
    if (!resolved.ok())
        return {"sh: " + path + ": not found", 127, false};
    auto decision = fs_.exec_check(path);
    if (!decision.allowed)
        return {"sh: " + path + ": " + decision.reason, 126, false};
    // Whitelisted base binary: run the matching emulated command.
    std::vector<std::string> rest = argv;
    rest[0] = vfs::base_name(resolved.node.resolved_path);
    return run_builtin(rest[0], rest);
}

CommandResult ShellInterpreter::run_builtin(const std::string& name,
                                            const std::vector<std::string>& argv) {
    if (name == "exit" || name == "logout") return {"", 0, true};
    if (name == "ls") return cmd_ls(argv);
    if (name == "cd") return cmd_cd(argv);
    if (name == "pwd") return {fs_.cwd(), 0, false};
    if (name == "cat") return cmd_cat(argv);
    if (name == "echo") return cmd_echo(argv);
    if (name == "uname") return cmd_uname(argv);
    if (name == "id") return {"uid=0(root) gid=0(root) groups=0(root)", 0, false};
    if (name == "whoami") return {"root", 0, false};
    if (name == "hostname") return {config_.hostname, 0, false};
    if (name == "ps") return cmd_ps(argv);
    if (name == "mkdir") return cmd_mkdir(argv);
    if (name == "rm") return cmd_rm(argv);
    if (name == "cp") return cmd_cp_mv(argv, false);
    if (name == "mv") return cmd_cp_mv(argv, true);
    if (name == "chmod") return cmd_chmod(argv);
    if (name == "touch") return cmd_touch(argv);
    if (name == "wget") return cmd_download(argv, false);
    if (name == "curl") return cmd_download(argv, true);
    if (name == "tar") return cmd_tar(argv);
    if (name == "unzip") return cmd_unzip(argv);
    if (name == "history") return cmd_history(argv);
    if (name == "uptime")
        return {" 12:04:21 up 42 days,  3:17,  1 user,  load average: 0.08, 0.03, 0.01", 0,
                false};
    if (name == "w")
        return {" 12:04:21 up 42 days,  3:17,  1 user,  load average: 0.08, 0.03, 0.01\n"
                "USER     TTY      FROM             LOGIN@   IDLE   JCPU   PCPU WHAT\n"
                "root     pts/0    localhost        11:32    0.00s  0.10s  0.01s -sh",
                0, false};
    return {name + ": command not found", 127, false};
}

CommandResult ShellInterpreter::cmd_ls(const std::vector<std::string>& argv) {
    bool long_form = false, all = false;
    std::vector<std::string> paths;
    for (size_t i = 1; i < argv.size(); i++) {
        const std::string& a = argv[i];
        if (!a.empty() && a[0] == '-') {
            if (a.find('l') != std::string::npos) long_form = true;
            if (a.find('a') != std::string::npos) all = true;
            continue;
        }
        paths.push_back(a);
    }
    if (paths.empty()) paths.push_back(".");

    std::string out;
    int status = 0;
    bool first = true;
    for (const auto& p : paths) {
        if (!first) out += "\n";
        first = false;
        if (paths.size() > 1) out += p + ":\n";

        auto resolved = fs_.resolve(p);
        if (!resolved.ok()) {
            out += "ls: " + p + ": No such file or directory";
            status = 1;
            continue;
        }
        std::vector<std::pair<std::string, vfs::NodeView>> rows;
        if (resolved.node.kind == vfs::FsNode::Kind::dir) {
            std::vector<vfs::OverlayFs::DirEntry> entries;
            fs_.list(p, &entries);
            if (all) {
                rows.emplace_back(".", resolved.node);
                auto parent = fs_.resolve(vfs::parent_path(resolved.node.resolved_path));
                if (parent.ok()) rows.emplace_back("..", parent.node);
            }
            for (auto& e : entries) {
                if (!all && !e.name.empty() && e.name[0] == '.') continue;
                rows.emplace_back(e.name, e.node);
            }
        } else {
            rows.emplace_back(p, resolved.node);
        }

        std::vector<std::string> lines;
        for (auto& [name, node] : rows) {
            if (!long_form) {
                lines.push_back(name);
                continue;
            }
            uint64_t size = node.kind == vfs::FsNode::Kind::dir ? 4096 : node.content->size();
            char buf[32];
            std::snprintf(buf, sizeof buf, "%8llu", static_cast<unsigned long long>(size));
            std::string line = perm_string(node.kind, node.mode) + " root     root " + buf +
                               " " + mtime_string(node.mtime) + " " + name;
            if (node.kind == vfs::FsNode::Kind::symlink) line += " -> " + *node.content;
            lines.push_back(line);
        }
        for (size_t i = 0; i < lines.size(); i++) {
            out += lines[i];
            if (i + 1 < lines.size()) out += "\n";
        }
    }
    return {out, status, false};
}

CommandResult ShellInterpreter::cmd_cd(const std::vector<std::string>& argv) {
    std::string target = argv.size() > 1 ? argv[1] : config_.home;
    vfs::FsError e = fs_.set_cwd(target);
    if (e == vfs::FsError::none) return {};
    if (e == vfs::FsError::not_a_directory)
        return {"cd: " + target + ": Not a directory", 1, false};
    return {"cd: " + target + ": No such file or directory", 1, false};
}

CommandResult ShellInterpreter::cmd_cat(const std::vector<std::string>& argv) {
    if (argv.size() < 2) return {};
    std::string out;
    int status = 0;
    for (size_t i = 1; i < argv.size(); i++) {
        auto r = fs_.resolve(argv[i]);
        if (!r.ok()) {
            if (!out.empty() && out.back() != '\n') out += "\n";
            out += "cat: " + argv[i] + ": No such file or directory";
            status = 1;
            continue;
        }
        if (r.node.kind == vfs::FsNode::Kind::dir) {
            if (!out.empty() && out.back() != '\n') out += "\n";
            out += "cat: " + argv[i] + ": Is a directory";
            status = 1;
            continue;
        }
        out += *r.node.content;
    }
    if (!out.empty() && out.back() == '\n') out.pop_back();
    return {out, status, false};
}

CommandResult ShellInterpreter::cmd_echo(const std::vector<std::string>& argv) {
    std::string out;
    size_t start = 1;
    bool newline = true;
    if (argv.size() > 1 && argv[1] == "-n") {
        newline = false;
        start = 2;
    }
    (void)newline; // output joining strips the trailing newline anyway
    for (size_t i = start; i < argv.size(); i++) {
        if (i > start) out += " ";
        out += argv[i];
    }
    return {out, 0, false};
}

CommandResult ShellInterpreter::cmd_uname(const std::vector<std::string>& argv) {
    auto fields = tokenize_command(config_.uname_banner);
    auto field = [&](size_t i) { return fields.size() > i ? fields[i] : std::string(); };
    if (argv.size() == 1) return {field(0), 0, false};
    const std::string& flag = argv[1];
    if (flag == "-a") return {config_.uname_banner, 0, false};
    if (flag == "-r") return {field(2), 0, false};
    if (flag == "-n") return {field(1), 0, false};
    if (flag == "-m") {
        // second-to-last word before "GNU/Linux"
        for (auto it = fields.rbegin(); it != fields.rend(); ++it)
            if (it->rfind("arm", 0) == 0 || it->rfind("i686", 0) == 0 ||
                it->rfind("x86", 0) == 0)
                return {*it, 0, false};
        return {field(0), 0, false};
    }
    if (flag == "-s") return {field(0), 0, false};
    return {field(0), 0, false};
}

CommandResult ShellInterpreter::cmd_ps(const std::vector<std::string>&) {
    static const char* kTable =
        "  PID USER       VSZ STAT COMMAND\n"
        "    1 root       296 S    /init\n"
        "    2 root         0 SW   [kthreadd]\n"
        "    3 root         0 SW   [ksoftirqd/0]\n"
        "   27 root         0 SW   [kswapd0]\n"
        "  118 root      1228 S    /system/bin/sh\n"
        "  243 root      3724 S    /system/bin/vold\n"
        "  312 root      1168 S    telnetd -l /system/bin/sh\n"
        "  401 root      1228 S    -sh\n"
        "  402 root      1100 R    ps";
    return {kTable, 0, false};
}

CommandResult ShellInterpreter::cmd_mkdir(const std::vector<std::string>& argv) {
    bool parents = false;
    std::string out;
    int status = 0;
    for (size_t i = 1; i < argv.size(); i++) {
        if (argv[i] == "-p") {
            parents = true;
            continue;
        }
        vfs::FsError e = fs_.mkdir(argv[i], parents);
        if (e != vfs::FsError::none && !(parents && e == vfs::FsError::exists)) {
            if (!out.empty()) out += "\n";
            out += "mkdir: can't create directory '" + argv[i] + "': " +
                   (e == vfs::FsError::exists ? "File exists" : "No such file or directory");
            status = 1;
        }
    }
    return {out, status, false};
}

CommandResult ShellInterpreter::cmd_rm(const std::vector<std::string>& argv) {
    bool recursive = false, force = false;
    std::string out;
    int status = 0;
    for (size_t i = 1; i < argv.size(); i++) {
        const std::string& a = argv[i];
        if (!a.empty() && a[0] == '-') {
            if (a.find('r') != std::string::npos || a.find('R') != std::string::npos)
                recursive = true;
            if (a.find('f') != std::string::npos) force = true;
            continue;
        }
        auto resolved = fs_.resolve(a);
        if (resolved.ok() && resolved.node.kind == vfs::FsNode::Kind::dir && !recursive) {
            if (!out.empty()) out += "\n";
            out += "rm: " + a + ": Is a directory";
            status = 1;
            continue;
        }
        vfs::FsError e = fs_.remove(a, recursive);
        if (e != vfs::FsError::none && !force) {
            if (!out.empty()) out += "\n";
            out += "rm: can't remove '" + a + "': " +
                   (e == vfs::FsError::refused ? "Operation not permitted"
                                               : "No such file or directory");
            status = 1;
        }
    }
    return {out, status, false};
}

CommandResult ShellInterpreter::cmd_cp_mv(const std::vector<std::string>& argv, bool move) {
    std::vector<std::string> paths;
    for (size_t i = 1; i < argv.size(); i++)
        if (argv[i].empty() || argv[i][0] != '-') paths.push_back(argv[i]);
    const char* tool = move ? "mv" : "cp";
    if (paths.size() != 2)
        return {std::string(tool) + ": usage: " + tool + " SOURCE DEST", 1, false};
    vfs::FsError e = move ? fs_.move(paths[0], paths[1]) : fs_.copy(paths[0], paths[1]);
    if (e == vfs::FsError::none) return {};
    if (e == vfs::FsError::is_directory)
        return {std::string(tool) + ": " + paths[0] + ": omitting directory", 1, false};
    return {std::string(tool) + ": can't stat '" + paths[0] + "': No such file or directory", 1,
            false};
}

CommandResult ShellInterpreter::cmd_chmod(const std::vector<std::string>& argv) {
    std::vector<std::string> args;
    for (size_t i = 1; i < argv.size(); i++)
        if (argv[i] != "-R") args.push_back(argv[i]);
    if (args.size() < 2) return {"chmod: missing operand", 1, false};
    const std::string& spec = args[0];

    uint32_t set_bits = 0, clear_bits = 0;
    bool octal = !spec.empty() && std::all_of(spec.begin(), spec.end(),
                                              [](char c) { return c >= '0' && c <= '7'; });
    if (octal) {
        uint32_t m = 0;
        for (char c : spec) m = m * 8 + static_cast<uint32_t>(c - '0');
        set_bits = m & 07777;
        clear_bits = 07777;
    } else {
        size_t i = 0;
        uint32_t who = 0;
        for (; i < spec.size(); i++) {
            if (spec[i] == 'u') who |= 0700;
            else if (spec[i] == 'g') who |= 0070;
            else if (spec[i] == 'o') who |= 0007;
            else if (spec[i] == 'a') who |= 0777;
            else break;
        }
        if (who == 0) who = 0777;
        if (i >= spec.size() || (spec[i] != '+' && spec[i] != '-'))
            return {"chmod: invalid mode: '" + spec + "'", 1, false};
        bool add = spec[i] == '+';
        uint32_t perm = 0;
        for (i++; i < spec.size(); i++) {
            if (spec[i] == 'r') perm |= 0444;
            else if (spec[i] == 'w') perm |= 0222;
            else if (spec[i] == 'x') perm |= 0111;
        }
        if (add)
            set_bits = perm & who;
        else
            clear_bits = perm & who;
    }

    std::string out;
    int status = 0;
    for (size_t k = 1; k < args.size(); k++) {
        vfs::FsError e = fs_.chmod(args[k], set_bits, clear_bits);
        if (e != vfs::FsError::none) {
            if (!out.empty()) out += "\n";
            out += "chmod: " + args[k] + ": No such file or directory";
            status = 1;
        }
    }
    return {out, status, false};
}

CommandResult ShellInterpreter::cmd_touch(const std::vector<std::string>& argv) {
    std::string out;
    int status = 0;
    for (size_t i = 1; i < argv.size(); i++) {
        if (!argv[i].empty() && argv[i][0] == '-') continue;
        vfs::FsError e = fs_.touch(argv[i]);
        if (e != vfs::FsError::none) {
            if (!out.empty()) out += "\n";
            out += "touch: " + argv[i] + ": No such file or directory";
            status = 1;
        }
    }
    return {out, status, false};
}

CommandResult ShellInterpreter::cmd_download(const std::vector<std::string>& argv,
                                             bool curl_style) {
    std::string url, save_as;
    bool save_to_file = !curl_style; // wget always saves; curl only with -O/-o
    for (size_t i = 1; i < argv.size(); i++) {
        const std::string& a = argv[i];
        if (a == "-O" && !curl_style && i + 1 < argv.size()) {
            save_as = argv[++i];
        } else if (a == "-O" && curl_style) {
            save_to_file = true;
        } else if (a == "-o" && curl_style && i + 1 < argv.size()) {
            save_to_file = true;
            save_as = argv[++i];
        } else if (!a.empty() && a[0] == '-') {
            continue; // other flags ignored with plausible behavior
        } else {
            url = a;
        }
    }
    const char* tool = curl_style ? "curl" : "wget";
    if (url.empty()) return {std::string(tool) + ": missing URL", 1, false};

    auto parsed = parse_url(url);
    if (!parsed) {
        if (curl_style)
            return {"curl: (1) Protocol not supported or malformed URL: " + url, 1, false};
        return {"wget: bad URL: " + url, 1, false};
    }
    std::string target = save_as.empty() ? parsed->target_filename() : save_as;

    FetchResult fetched = fetcher_.fetch(url);
    if (!fetched.ok()) {
        std::string reason;
        switch (fetched.status) {
        case FetchResult::Status::timeout: reason = "Connection timed out"; break;
        case FetchResult::Status::too_large: reason = "File too large"; break;
        case FetchResult::Status::unsupported: reason = "Protocol not supported"; break;
        default: reason = "Connection refused"; break;
        }
        if (curl_style)
            return {"curl: (7) Failed to connect to " + parsed->host + ": " + reason, 7, false};
        return {"Connecting to " + parsed->host + "... failed: " + reason + ".", 4, false};
    }

    auto artifact = artifacts_.store(
        fetched.bytes,
        ArtifactOrigin{ArtifactOrigin::Kind::shell_download, url, "", "", ""},
        transcript_ ? std::optional<uint64_t>(transcript_->session_id()) : std::nullopt,
        clock_.now_ms());
    if (transcript_) transcript_->record_artifact(artifact.digest);

    std::string out;
    if (save_to_file) {
        vfs::FsError e = fs_.write_file(target, fetched.bytes);
        if (e != vfs::FsError::none)
            return {std::string(tool) + ": " + target + ": " + vfs::to_string(e), 1, false};
    }
    if (curl_style) {
        if (!save_to_file) {
            // curl without -O/-o prints the body (preview-capped)
            out = fetched.bytes.substr(0, 4096);
            if (!out.empty() && out.back() == '\n') out.pop_back();
        }
        return {out, 0, false};
    }
    out = "Connecting to " + parsed->host + "... connected.\n";
    out += "HTTP request sent, awaiting response... 200 OK\n";
    out += "Length: " + std::to_string(fetched.bytes.size()) + " [application/octet-stream]\n";
    out += "Saving to: '" + target + "'\n\n";
    out += "'" + target + "' saved [" + std::to_string(fetched.bytes.size()) + "/" +
           std::to_string(fetched.bytes.size()) + "]";
    return {out, 0, false};
}

CommandResult ShellInterpreter::cmd_tar(const std::vector<std::string>& argv) {
    std::string file;
    bool list_mode = false;
    for (size_t i = 1; i < argv.size(); i++) {
        const std::string& a = argv[i];
        if (a.empty()) continue;
        if (a[0] == '-' || i == 1) {
            if (a.find('t') != std::string::npos) list_mode = true;
            if (a.find('f') != std::string::npos && i + 1 < argv.size()) file = argv[++i];
            continue;
        }
        if (file.empty()) file = a;
    }
    if (file.empty()) return {"tar: missing archive name", 1, false};
    auto r = fs_.resolve(file);
    if (!r.ok())
        return {"tar: " + file + ": Cannot open: No such file or directory", 1, false};
    if (!list_mode) return {}; // extraction is cataloged, nothing is installed

    const std::string& bytes = *r.node.content;
    std::string out;
    size_t off = 0;
    bool looks_tar = false;
    while (off + 512 <= bytes.size()) {
        if (bytes.compare(off + 257, 5, "ustar") != 0) break;
        looks_tar = true;
        std::string name = bytes.substr(off, 100);
        name = name.c_str(); // cut at NUL
        if (name.empty()) break;
        if (!out.empty()) out += "\n";
        out += name;
        unsigned long size = std::strtoul(bytes.substr(off + 124, 12).c_str(), nullptr, 8);
        off += 512 + ((size + 511) / 512) * 512;
    }
    if (!looks_tar) return {"tar: This does not look like a tar archive", 2, false};
    return {out, 0, false};
}

CommandResult ShellInterpreter::cmd_unzip(const std::vector<std::string>& argv) {
    std::string file;
    for (size_t i = 1; i < argv.size(); i++)
        if (!argv[i].empty() && argv[i][0] != '-') {
            file = argv[i];
            break;
        }
    if (file.empty()) return {"unzip: missing archive name", 1, false};
    auto r = fs_.resolve(file);
    if (!r.ok()) return {"unzip: cannot find or open " + file, 9, false};
    if (r.node.content->rfind("PK", 0) != 0)
        return {"Archive:  " + file + "\n  End-of-central-directory signature not found.", 9,
                false};
    return {"Archive:  " + file, 0, false};
}

CommandResult ShellInterpreter::cmd_history(const std::vector<std::string>&) {
    std::string out;
    for (size_t i = 0; i < history_.size(); i++) {
        char num[16];
        std::snprintf(num, sizeof num, "%5zu  ", i + 1);
        out += num + history_[i];
        if (i + 1 < history_.size()) out += "\n";
    }
    return {out, 0, false};
}

} // namespace droidpot::shell
