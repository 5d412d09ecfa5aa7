#include "config/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/base64.hpp"
#include "core/sink.hpp"

namespace droidpot::config {

namespace {

// Observed top attacked ports; the trap set defaults to these minus ports
// owned by dedicated traps.
const uint16_t kDefaultTcpTrapPorts[] = {23,   25,   80,   110,  139,  143,  445, 1080,
                                         1433, 3306, 3389, 5900, 5901, 5902, 6666};
const uint16_t kDefaultUdpTrapPorts[] = {53, 5060};

template <typename T>
bool get_uint16(const nlohmann::json& j, const char* key, T* out, std::vector<std::string>* errs,
                const std::string& where) {
    if (!j.contains(key)) return true;
    if (!j[key].is_number_unsigned() || j[key].template get<uint64_t>() > 65535) {
        errs->push_back(where + "." + key + " must be a port number (0-65535)");
        return false;
    }
    *out = static_cast<T>(j[key].template get<uint64_t>());
    return true;
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where, std::vector<std::string>* errs) {
    for (auto& [key, _] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            errs->push_back(where + ": unknown key \"" + key + "\"");
    }
}

} // namespace

std::string ConfigError::join() const {
    std::string out;
    for (const auto& p : problems) {
        if (!out.empty()) out += "; ";
        out += p;
    }
    return out;
}

porttrap::TrapPolicy DaemonConfig::effective_trap_policy() const {
    porttrap::TrapPolicy policy;
    if (!port_trap.enabled) return policy;

    std::set<uint16_t> owned_tcp;
    if (shell.enabled) owned_tcp.insert(shell.port);
    if (web.enabled) owned_tcp.insert(web.port);
    if (ftp.enabled) owned_tcp.insert(ftp.port);
    std::set<uint16_t> owned_udp;
    if (tftp.enabled) owned_udp.insert(tftp.port);

    std::vector<uint16_t> tcp = port_trap.tcp_ports;
    std::vector<uint16_t> udp = port_trap.udp_ports;
    if (port_trap.use_defaults) {
        tcp.assign(std::begin(kDefaultTcpTrapPorts), std::end(kDefaultTcpTrapPorts));
        udp.assign(std::begin(kDefaultUdpTrapPorts), std::end(kDefaultUdpTrapPorts));
    }

    auto mode_for = [&](const char* proto, uint16_t port) {
        auto it = port_trap.modes.find(std::string(proto) + "/" + std::to_string(port));
        return it == port_trap.modes.end() ? porttrap::PortPolicy{} : it->second;
    };
    // Port 0 binds a fresh ephemeral port, so it never collides with a
    // dedicated service.
    for (uint16_t p : tcp)
        if (p == 0 || !owned_tcp.count(p)) policy.tcp_ports[p] = mode_for("tcp", p);
    for (uint16_t p : udp)
        if (p == 0 || !owned_udp.count(p)) policy.udp_ports[p] = mode_for("udp", p);
    return policy;
}

std::optional<DaemonConfig> load_config(const std::string& path, ConfigError* error) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (error) error->problems.push_back(path + ": cannot open config file");
        return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return load_config_text(buf.str(), error);
}

std::optional<DaemonConfig> load_config_text(const std::string& json_text, ConfigError* error) {
    std::vector<std::string> errs;
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        if (error) error->problems.push_back("config is not a JSON object");
        return std::nullopt;
    }

    DaemonConfig cfg;
    try {
    check_keys(j,
               {"vantage", "bind_addr", "data_dir", "exclusion", "fs_manifest", "shell", "web",
                "ftp", "tftp", "port_trap", "fetch", "exporter"},
               "config", &errs);

    if (!j.contains("vantage") || !j["vantage"].is_string()) {
        errs.push_back("vantage is required (umts, darknet, dsl, university, or a custom label)");
    } else {
        auto v = Vantage::parse(j["vantage"].get<std::string>());
        if (!v)
            errs.push_back("bad vantage label \"" + j["vantage"].get<std::string>() +
                           "\" (custom labels: lowercase, <= 32 chars)");
        else
            cfg.vantage = *v;
    }

    if (j.contains("bind_addr")) {
        if (!j["bind_addr"].is_string() || !IpAddr::parse(j["bind_addr"].get<std::string>()))
            errs.push_back("bind_addr must be an IP address");
        else
            cfg.bind_addr = j["bind_addr"].get<std::string>();
    }
    if (j.contains("data_dir")) {
        if (!j["data_dir"].is_string() || j["data_dir"].get<std::string>().empty())
            errs.push_back("data_dir must be a non-empty path");
        else
            cfg.data_dir = j["data_dir"].get<std::string>();
    }
    if (j.contains("fs_manifest")) {
        if (!j["fs_manifest"].is_string())
            errs.push_back("fs_manifest must be a path");
        else
            cfg.fs_manifest = j["fs_manifest"].get<std::string>();
    }
    if (j.contains("exclusion")) {
        if (!j["exclusion"].is_array()) {
            errs.push_back("exclusion must be an array of addresses/CIDR prefixes");
        } else {
            for (const auto& e : j["exclusion"]) {
                if (!e.is_string()) {
                    errs.push_back("exclusion entries must be strings");
                    continue;
                }
                cfg.exclusion.push_back(e.get<std::string>());
            }
            ExclusionSet::parse(cfg.exclusion, &errs); // validates prefixes
        }
    }

    if (j.contains("shell")) {
        const auto& s = j["shell"];
        check_keys(s,
                   {"enabled", "port", "credentials", "accept_after_attempts", "uname_banner",
                    "hostname", "idle_timeout_s"},
                   "shell", &errs);
        if (s.contains("enabled")) cfg.shell.enabled = s["enabled"].get<bool>();
        get_uint16(s, "port", &cfg.shell.port, &errs, "shell");
        if (s.contains("credentials")) {
            if (!s["credentials"].is_array()) {
                errs.push_back("shell.credentials must be an array of [user, password] pairs");
            } else {
                cfg.shell.policy.accepted.clear();
                for (const auto& c : s["credentials"]) {
                    if (!c.is_array() || c.size() != 2 || !c[0].is_string() || !c[1].is_string()) {
                        errs.push_back("shell.credentials entries must be [user, password]");
                        continue;
                    }
                    cfg.shell.policy.accepted.emplace_back(c[0].get<std::string>(),
                                                           c[1].get<std::string>());
                }
            }
        }
        if (s.contains("accept_after_attempts")) {
            if (!s["accept_after_attempts"].is_number_integer() ||
                s["accept_after_attempts"].get<int>() < 0)
                errs.push_back("shell.accept_after_attempts must be an integer >= 0");
            else
                cfg.shell.policy.accept_after_attempts = s["accept_after_attempts"].get<int>();
        }
        if (s.contains("uname_banner")) cfg.shell.uname_banner = s["uname_banner"].get<std::string>();
        if (s.contains("hostname")) cfg.shell.hostname = s["hostname"].get<std::string>();
        if (s.contains("idle_timeout_s")) {
            if (!s["idle_timeout_s"].is_number_integer() || s["idle_timeout_s"].get<int>() < 1)
                errs.push_back("shell.idle_timeout_s must be >= 1");
            else
                cfg.shell.idle_timeout_s = s["idle_timeout_s"].get<int>();
        }
    }

    if (j.contains("web")) {
        const auto& s = j["web"];
        check_keys(s, {"enabled", "port"}, "web", &errs);
        if (s.contains("enabled")) cfg.web.enabled = s["enabled"].get<bool>();
        get_uint16(s, "port", &cfg.web.port, &errs, "web");
    }
    if (j.contains("ftp")) {
        const auto& s = j["ftp"];
        check_keys(s, {"enabled", "port", "pasv_min", "pasv_max"}, "ftp", &errs);
        if (s.contains("enabled")) cfg.ftp.enabled = s["enabled"].get<bool>();
        get_uint16(s, "port", &cfg.ftp.port, &errs, "ftp");
        get_uint16(s, "pasv_min", &cfg.ftp.pasv_min, &errs, "ftp");
        get_uint16(s, "pasv_max", &cfg.ftp.pasv_max, &errs, "ftp");
        if (cfg.ftp.pasv_min > cfg.ftp.pasv_max)
            errs.push_back("ftp.pasv_min must be <= ftp.pasv_max");
    }
    if (j.contains("tftp")) {
        const auto& s = j["tftp"];
        check_keys(s, {"enabled", "port"}, "tftp", &errs);
        if (s.contains("enabled")) cfg.tftp.enabled = s["enabled"].get<bool>();
        get_uint16(s, "port", &cfg.tftp.port, &errs, "tftp");
    }

    if (j.contains("port_trap")) {
        const auto& s = j["port_trap"];
        check_keys(s, {"enabled", "tcp_ports", "udp_ports", "modes"}, "port_trap", &errs);
        if (s.contains("enabled")) cfg.port_trap.enabled = s["enabled"].get<bool>();
        auto load_ports = [&](const char* key, std::vector<uint16_t>* out) {
            if (!s.contains(key)) return;
            cfg.port_trap.use_defaults = false;
            if (!s[key].is_array()) {
                errs.push_back(std::string("port_trap.") + key + " must be an array of ports");
                return;
            }
            for (const auto& p : s[key]) {
                if (!p.is_number_unsigned() || p.get<uint64_t>() > 65535) {
                    errs.push_back(std::string("port_trap.") + key + ": bad port");
                    continue;
                }
                out->push_back(static_cast<uint16_t>(p.get<uint64_t>()));
            }
        };
        load_ports("tcp_ports", &cfg.port_trap.tcp_ports);
        load_ports("udp_ports", &cfg.port_trap.udp_ports);
        if (s.contains("modes")) {
            if (!s["modes"].is_object()) {
                errs.push_back("port_trap.modes must be an object keyed by \"tcp/25\"");
            } else {
                for (auto& [key, m] : s["modes"].items()) {
                    if (key.rfind("tcp/", 0) != 0 && key.rfind("udp/", 0) != 0) {
                        errs.push_back("port_trap.modes keys look like \"tcp/25\" or \"udp/53\"; got \"" +
                                       key + "\"");
                        continue;
                    }
                    porttrap::PortPolicy policy;
                    std::string mode = m.value("mode", "silent");
                    if (mode == "silent") {
                        policy.mode = porttrap::TrapMode::silent;
                    } else if (mode == "echo") {
                        policy.mode = porttrap::TrapMode::echo;
                    } else if (mode == "banner") {
                        policy.mode = porttrap::TrapMode::banner;
                        if (m.contains("banner_b64")) {
                            auto bytes = base64_decode(m["banner_b64"].get<std::string>());
                            if (!bytes) {
                                errs.push_back("port_trap.modes." + key + ": bad banner_b64");
                                continue;
                            }
                            policy.banner = *bytes;
                        } else {
                            policy.banner = m.value("banner", "");
                        }
                        if (policy.banner.empty())
                            errs.push_back("port_trap.modes." + key +
                                           ": banner mode needs banner or banner_b64");
                    } else {
                        errs.push_back("port_trap.modes." + key + ": unknown mode \"" + mode +
                                       "\"");
                        continue;
                    }
                    cfg.port_trap.modes[key] = policy;
                }
            }
        }
    }

    if (j.contains("fetch")) {
        const auto& s = j["fetch"];
        check_keys(s, {"mode", "fixtures", "allowlist"}, "fetch", &errs);
        std::string mode = s.value("mode", "stub");
        if (mode == "stub")
            cfg.fetch.mode = FetchConfig::Mode::stub;
        else if (mode == "live")
            cfg.fetch.mode = FetchConfig::Mode::live;
        else if (mode == "off")
            cfg.fetch.mode = FetchConfig::Mode::off;
        else
            errs.push_back("fetch.mode must be stub, live, or off");
        if (s.contains("fixtures")) cfg.fetch.fixtures_path = s["fixtures"].get<std::string>();
        if (s.contains("allowlist"))
            for (const auto& h : s["allowlist"])
                cfg.fetch.allowlist.push_back(h.get<std::string>());
        if (cfg.fetch.mode == FetchConfig::Mode::live && cfg.fetch.allowlist.empty())
            errs.push_back("fetch.mode live requires a non-empty allowlist");
    }

    if (j.contains("exporter")) {
        const auto& s = j["exporter"];
        check_keys(s, {"enabled", "collector", "interval_s", "spool_dir"}, "exporter", &errs);
        if (s.contains("enabled")) cfg.exporter.enabled = s["enabled"].get<bool>();
        if (s.contains("collector")) {
            std::string addr = s["collector"].get<std::string>();
            auto colon = addr.rfind(':');
            bool ok = colon != std::string::npos && colon > 0;
            if (ok) {
                std::string host = addr.substr(0, colon);
                std::string port_text = addr.substr(colon + 1);
                ok = IpAddr::parse(host).has_value() && !port_text.empty() &&
                     std::all_of(port_text.begin(), port_text.end(), ::isdigit);
                if (ok) {
                    long port = std::stol(port_text);
                    ok = port >= 1 && port <= 65535;
                    if (ok) {
                        cfg.exporter.collector_host = host;
                        cfg.exporter.collector_port = static_cast<uint16_t>(port);
                    }
                }
            }
            if (!ok) errs.push_back("exporter.collector must be \"ip:port\"");
        }
        if (s.contains("interval_s")) {
            if (!s["interval_s"].is_number_integer() || s["interval_s"].get<int>() < 10)
                errs.push_back("exporter.interval_s must be >= 10");
            else
                cfg.exporter.interval_s = s["interval_s"].get<int>();
        }
        if (s.contains("spool_dir")) cfg.exporter.spool_dir = s["spool_dir"].get<std::string>();
    }

    // Port conflicts across enabled services (the trap set is
    // auto-deconflicted, so only dedicated services are checked). Port 0
    // requests a distinct ephemeral port, so it never conflicts.
    std::map<uint16_t, std::vector<std::string>> tcp_claims;
    if (cfg.shell.enabled) tcp_claims[cfg.shell.port].push_back("shell");
    if (cfg.web.enabled) tcp_claims[cfg.web.port].push_back("web");
    if (cfg.ftp.enabled) tcp_claims[cfg.ftp.port].push_back("ftp");
    for (const auto& [port, claimants] : tcp_claims) {
        if (port == 0) continue;
        if (claimants.size() > 1) {
            std::string who;
            for (const auto& c : claimants) who += (who.empty() ? "" : ", ") + c;
            errs.push_back("port conflict on tcp/" + std::to_string(port) + ": " + who);
        }
    }
    } catch (const nlohmann::json::exception& e) {
        errs.push_back(std::string("config: ") + e.what());
    }

    if (!errs.empty()) {
        if (error) error->problems = std::move(errs);
        return std::nullopt;
    }
    return cfg;
}

} // namespace droidpot::config
