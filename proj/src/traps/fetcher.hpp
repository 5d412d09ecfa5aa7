#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace droidpot {

struct ParsedUrl {
    std::string scheme;
    std::string host;
    uint16_t port = 0;
    std::string path; // includes leading '/'
    // wget-style target: last path segment, query stripped, or index.html
    std::string target_filename() const;
};

std::optional<ParsedUrl> parse_url(const std::string& url);

struct FetchResult {
    enum class Status : uint8_t { ok, timeout, too_large, unreachable, unsupported, disabled };
    Status status = Status::disabled;
    std::string bytes;
    bool ok() const { return status == Status::ok; }
};

// Download backend for the emulated wget/curl. Live fetching is opt-in and
// allowlisted so the honeypot cannot be used as an open proxy.
class Fetcher {
  public:
    virtual ~Fetcher() = default;
    virtual FetchResult fetch(const std::string& url) = 0;

    static constexpr size_t kMaxBytes = 16 * 1024 * 1024;
    static constexpr int kTimeoutSec = 30;
};

class DisabledFetcher final : public Fetcher {
  public:
    FetchResult fetch(const std::string&) override {
        return {FetchResult::Status::disabled, {}};
    }
};

// Serves bytes from a url -> content map; used by tests and scripted runs.
class StubFetcher final : public Fetcher {
  public:
    explicit StubFetcher(std::map<std::string, std::string> fixtures)
        : fixtures_(std::move(fixtures)) {}

    // Fixture file: JSON object {url: {"content_b64": ...} | {"content": ...}}
    static std::unique_ptr<StubFetcher> from_file(const std::string& path, std::string* error);

    FetchResult fetch(const std::string& url) override;

  private:
    std::map<std::string, std::string> fixtures_;
};

// Plain-HTTP client with the shared timeout/size limits. Hosts not on the
// allowlist are refused.
class LiveFetcher final : public Fetcher {
  public:
    explicit LiveFetcher(std::vector<std::string> host_allowlist)
        : allowlist_(std::move(host_allowlist)) {}

    FetchResult fetch(const std::string& url) override;

  private:
    std::vector<std::string> allowlist_;
};

} // namespace droidpot
