#include "traps/fetcher.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "core/base64.hpp"

namespace droidpot {

std::string ParsedUrl::target_filename() const {
    std::string p = path;
    auto q = p.find('?');
    if (q != std::string::npos) p.resize(q);
    auto slash = p.rfind('/');
    std::string name = slash == std::string::npos ? p : p.substr(slash + 1);
    if (name.empty()) return "index.html";
    return name;
}

std::optional<ParsedUrl> parse_url(const std::string& url) {
    auto sep = url.find("://");
    if (sep == std::string::npos || sep == 0) return std::nullopt;
    ParsedUrl out;
    out.scheme = url.substr(0, sep);
    std::transform(out.scheme.begin(), out.scheme.end(), out.scheme.begin(), ::tolower);
    if (out.scheme != "http" && out.scheme != "https" && out.scheme != "ftp")
        return std::nullopt;

    std::string rest = url.substr(sep + 3);
    auto path_start = rest.find('/');
    std::string hostport = path_start == std::string::npos ? rest : rest.substr(0, path_start);
    out.path = path_start == std::string::npos ? "/" : rest.substr(path_start);
    if (hostport.empty()) return std::nullopt;

    auto colon = hostport.rfind(':');
    if (colon != std::string::npos && hostport.find(']') == std::string::npos) {
        std::string port_text = hostport.substr(colon + 1);
        if (port_text.empty() ||
            !std::all_of(port_text.begin(), port_text.end(), ::isdigit))
            return std::nullopt;
        long port = std::stol(port_text);
        if (port < 1 || port > 65535) return std::nullopt;
        out.port = static_cast<uint16_t>(port);
        out.host = hostport.substr(0, colon);
    } else {
        out.host = hostport;
        out.port = out.scheme == "https" ? 443 : out.scheme == "ftp" ? 21 : 80;
    }
    if (out.host.empty()) return std::nullopt;
    return out;
}

std::unique_ptr<StubFetcher> StubFetcher::from_file(const std::string& path, std::string* error) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (error) *error = path + ": cannot open fetch fixtures";
        return nullptr;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j = nlohmann::json::parse(buf.str(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        if (error) *error = path + ": fetch fixtures must be a JSON object";
        return nullptr;
    }
    std::map<std::string, std::string> fixtures;
    for (auto& [url, spec] : j.items()) {
        if (spec.is_string()) {
            fixtures[url] = spec.get<std::string>();
        } else if (spec.is_object() && spec.contains("content_b64")) {
            auto bytes = base64_decode(spec["content_b64"].get<std::string>());
            if (!bytes) {
                if (error) *error = path + ": bad base64 for " + url;
                return nullptr;
            }
            fixtures[url] = *bytes;
        } else if (spec.is_object() && spec.contains("content")) {
            fixtures[url] = spec["content"].get<std::string>();
        } else {
            if (error) *error = path + ": fixture for " + url + " needs content or content_b64";
            return nullptr;
        }
    }
    return std::make_unique<StubFetcher>(std::move(fixtures));
}

FetchResult StubFetcher::fetch(const std::string& url) {
    auto it = fixtures_.find(url);
    if (it == fixtures_.end()) return {FetchResult::Status::unreachable, {}};
    if (it->second.size() > kMaxBytes) return {FetchResult::Status::too_large, {}};
    return {FetchResult::Status::ok, it->second};
}

FetchResult LiveFetcher::fetch(const std::string& url) {
    auto parsed = parse_url(url);
    if (!parsed) return {FetchResult::Status::unreachable, {}};
    if (parsed->scheme != "http") return {FetchResult::Status::unsupported, {}};
    if (std::find(allowlist_.begin(), allowlist_.end(), parsed->host) == allowlist_.end())
        return {FetchResult::Status::disabled, {}};

    httplib::Client client(parsed->host, parsed->port);
    client.set_connection_timeout(kTimeoutSec, 0);
    client.set_read_timeout(kTimeoutSec, 0);

    std::string body;
    bool too_large = false;
    auto res = client.Get(parsed->path, [&](const char* data, size_t len) {
        if (body.size() + len > kMaxBytes) {
            too_large = true;
            return false;
        }
        body.append(data, len);
        return true;
    });
    if (too_large) return {FetchResult::Status::too_large, {}};
    if (!res) return {FetchResult::Status::unreachable, {}};
    if (res->status != 200) return {FetchResult::Status::unreachable, {}};
    return {FetchResult::Status::ok, std::move(body)};
}

} // namespace droidpot
