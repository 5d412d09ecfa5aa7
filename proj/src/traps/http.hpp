#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "net/socket.hpp"

namespace droidpot::web {

// Bounded HTTP/1.0-1.1 subset. Malformed input is the expected case here,
// so parsing never throws and never trusts lengths.
struct HttpRequest {
    std::string method;
    std::string raw_target; // as received
    std::string path;       // decoded, before normalization
    std::string query;
    std::string version;
    std::map<std::string, std::string> headers; // keys lowercased
    std::string body;
    bool keep_alive = false;

    std::string header(const std::string& lower_name) const {
        auto it = headers.find(lower_name);
        return it == headers.end() ? "" : it->second;
    }
};

enum class ReadStatus : uint8_t {
    ok,
    closed,        // clean EOF before a request line
    timeout,
    malformed,     // bad request line / headers
    header_too_large,
    body_too_large,
};

constexpr size_t kMaxHeaderBytes = 16 * 1024;
constexpr size_t kMaxBodyBytes = 16 * 1024 * 1024;

// Reads one request from the stream. On body_too_large the request line and
// headers are still populated so the caller can answer 413. carry holds
// pipelined bytes between keep-alive requests on one connection.
ReadStatus read_request(net::ByteStream& stream, HttpRequest* out, int timeout_ms,
                        size_t max_body = kMaxBodyBytes, std::string* carry = nullptr);

std::string status_text(int code);
std::string make_response(int status, const std::string& content_type, const std::string& body,
                          bool keep_alive);

std::string html_escape(const std::string& text);
std::string url_decode(const std::string& text);

// Escapes non-printable bytes as \xNN for log previews.
std::string printable_escape(const std::string& data, size_t max_len);

struct MultipartPart {
    std::string name;
    std::string filename;
    std::string content;
};

// Parses multipart/form-data given the Content-Type header value.
bool parse_multipart(const std::string& content_type, const std::string& body,
                     std::vector<MultipartPart>* parts);

std::map<std::string, std::string> parse_urlencoded(const std::string& body);

// Upload names are restricted to [A-Za-z0-9._-]; empty results fall back to
// "upload.bin".
std::string sanitize_filename(const std::string& name);

} // namespace droidpot::web
