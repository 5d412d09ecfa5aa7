#include "traps/http.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

namespace droidpot::web {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Accumulates stream bytes until the header terminator; bounded.
class HeaderReader {
  public:
    HeaderReader(net::ByteStream& stream, int timeout_ms)
        : stream_(stream), timeout_ms_(timeout_ms) {}

    // Returns offset just past "\r\n\r\n" (or "\n\n"), or npos variants.
    enum class Result { ok, closed, timeout, too_large };
    Result read_until_blank(std::string* data, size_t* header_end) {
        while (true) {
            auto pos = data->find("\r\n\r\n");
            size_t skip = 4;
            if (pos == std::string::npos) {
                pos = data->find("\n\n");
                skip = 2;
            }
            if (pos != std::string::npos) {
                *header_end = pos + skip;
                return Result::ok;
            }
            if (data->size() > kMaxHeaderBytes) return Result::too_large;
            char chunk[4096];
            int n = stream_.read_some(chunk, sizeof chunk, timeout_ms_);
            if (n == 0) return Result::closed;
            if (n == net::ByteStream::kTimeout) return Result::timeout;
            if (n < 0) return Result::closed;
            data->append(chunk, static_cast<size_t>(n));
        }
    }

  private:
    net::ByteStream& stream_;
    int timeout_ms_;
};

} // namespace

std::string url_decode(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (size_t i = 0; i < text.size(); i++) {
        if (text[i] == '%' && i + 2 < text.size() && isxdigit((unsigned char)text[i + 1]) &&
            isxdigit((unsigned char)text[i + 2])) {
            auto hex = [](char c) {
                return c <= '9' ? c - '0' : (c | 0x20) - 'a' + 10;
            };
            out.push_back(static_cast<char>(hex(text[i + 1]) * 16 + hex(text[i + 2])));
            i += 2;
        } else if (text[i] == '+') {
            out.push_back(' ');
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

ReadStatus read_request(net::ByteStream& stream, HttpRequest* out, int timeout_ms,
                        size_t max_body, std::string* carry) {
    *out = HttpRequest{};
    std::string data;
    if (carry) data.swap(*carry);
    size_t header_end = 0;
    HeaderReader reader(stream, timeout_ms);
    switch (reader.read_until_blank(&data, &header_end)) {
    case HeaderReader::Result::closed:
        return data.empty() ? ReadStatus::closed : ReadStatus::malformed;
    case HeaderReader::Result::timeout: return ReadStatus::timeout;
    case HeaderReader::Result::too_large: return ReadStatus::header_too_large;
    case HeaderReader::Result::ok: break;
    }

    // Request line
    size_t line_end = data.find('\n');
    std::string request_line = trim(data.substr(0, line_end));
    size_t sp1 = request_line.find(' ');
    size_t sp2 = request_line.rfind(' ');
    if (sp1 == std::string::npos || sp2 == sp1) return ReadStatus::malformed;
    out->method = request_line.substr(0, sp1);
    out->raw_target = trim(request_line.substr(sp1 + 1, sp2 - sp1 - 1));
    out->version = request_line.substr(sp2 + 1);
    if (out->method.empty() || out->raw_target.empty()) return ReadStatus::malformed;
    if (out->version != "HTTP/1.0" && out->version != "HTTP/1.1") return ReadStatus::malformed;
    for (char c : out->method)
        if (c < 'A' || c > 'Z') return ReadStatus::malformed;

    auto qpos = out->raw_target.find('?');
    out->path = url_decode(qpos == std::string::npos ? out->raw_target
                                                     : out->raw_target.substr(0, qpos));
    out->query = qpos == std::string::npos ? "" : out->raw_target.substr(qpos + 1);

    // Headers
    size_t pos = line_end + 1;
    while (pos < header_end) {
        size_t eol = data.find('\n', pos);
        if (eol == std::string::npos || eol >= header_end) break;
        std::string line = trim(data.substr(pos, eol - pos));
        pos = eol + 1;
        if (line.empty()) break;
        auto colon = line.find(':');
        if (colon == std::string::npos) continue; // tolerated, honeypots see garbage
        out->headers[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
    }

    out->keep_alive = out->version == "HTTP/1.1";
    std::string conn = lower(out->header("connection"));
    if (conn == "close") out->keep_alive = false;
    if (conn == "keep-alive") out->keep_alive = true;

    // Body
    size_t consumed = header_end;
    std::string cl = out->header("content-length");
    if (!cl.empty()) {
        bool digits = std::all_of(cl.begin(), cl.end(), ::isdigit) && cl.size() <= 12;
        if (!digits) return ReadStatus::malformed;
        size_t want = static_cast<size_t>(std::stoull(cl));
        if (want > max_body) return ReadStatus::body_too_large;
        out->body = data.substr(header_end);
        if (out->body.size() > want) out->body.resize(want);
        consumed = header_end + out->body.size();
        while (out->body.size() < want) {
            char chunk[8192];
            int n = stream.read_some(chunk, sizeof chunk, timeout_ms);
            if (n == 0) return ReadStatus::malformed;
            if (n == net::ByteStream::kTimeout) return ReadStatus::timeout;
            if (n < 0) return ReadStatus::malformed;
            size_t take = std::min(static_cast<size_t>(n), want - out->body.size());
            out->body.append(chunk, take);
            // pipelined bytes past the body belong to the next request
            if (carry && take < static_cast<size_t>(n))
                carry->append(chunk + take, static_cast<size_t>(n) - take);
        }
    }
    // keep unread pipelined bytes for the next request on this connection
    if (carry && consumed < data.size()) *carry += data.substr(consumed);
    return ReadStatus::ok;
}

std::string status_text(int code) {
    switch (code) {
    case 200: return "OK";
    case 400: return "Bad Request";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 413: return "Request Entity Too Large";
    default: return "OK";
    }
}

std::string make_response(int status, const std::string& content_type, const std::string& body,
                          bool keep_alive) {
    std::string out = "HTTP/1.1 " + std::to_string(status) + " " + status_text(status) + "\r\n";
    out += "Server: MiniDLNA/1.0\r\n";
    out += "Content-Type: " + content_type + "\r\n";
    out += "Content-Length: " + std::to_string(body.size()) + "\r\n";
    out += std::string("Connection: ") + (keep_alive ? "keep-alive" : "close") + "\r\n";
    out += "\r\n";
    out += body;
    return out;
}

std::string html_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&#39;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string printable_escape(const std::string& data, size_t max_len) {
    std::string out;
    for (size_t i = 0; i < data.size() && out.size() < max_len; i++) {
        auto c = static_cast<unsigned char>(data[i]);
        if (c >= 0x20 && c < 0x7F && c != '\\') {
            out.push_back(static_cast<char>(c));
        } else {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\x%02x", c);
            out += buf;
        }
    }
    return out;
}

bool parse_multipart(const std::string& content_type, const std::string& body,
                     std::vector<MultipartPart>* parts) {
    parts->clear();
    auto bpos = lower(content_type).find("boundary=");
    if (lower(content_type).find("multipart/form-data") == std::string::npos ||
        bpos == std::string::npos)
        return false;
    std::string boundary = trim(content_type.substr(bpos + 9));
    if (!boundary.empty() && boundary.front() == '"' && boundary.back() == '"' &&
        boundary.size() >= 2)
        boundary = boundary.substr(1, boundary.size() - 2);
    if (boundary.empty()) return false;
    std::string delim = "--" + boundary;

    size_t pos = body.find(delim);
    if (pos == std::string::npos) return false;
    pos += delim.size();
    while (true) {
        if (body.compare(pos, 2, "--") == 0) break; // final boundary
        if (body.compare(pos, 2, "\r\n") == 0)
            pos += 2;
        else if (body.compare(pos, 1, "\n") == 0)
            pos += 1;

        size_t head_end = body.find("\r\n\r\n", pos);
        size_t skip = 4;
        if (head_end == std::string::npos) {
            head_end = body.find("\n\n", pos);
            skip = 2;
        }
        if (head_end == std::string::npos) return false;

        MultipartPart part;
        std::string head = body.substr(pos, head_end - pos);
        auto cd = lower(head).find("content-disposition:");
        if (cd != std::string::npos) {
            size_t line_end = head.find('\n', cd);
            std::string line = head.substr(cd, line_end - cd);
            auto grab = [&](const char* key) -> std::string {
                auto k = line.find(key);
                if (k == std::string::npos) return "";
                k += std::strlen(key);
                if (k < line.size() && line[k] == '"') {
                    auto end = line.find('"', k + 1);
                    if (end == std::string::npos) return "";
                    return line.substr(k + 1, end - k - 1);
                }
                auto end = line.find_first_of("; \r", k);
                return line.substr(k, end - k);
            };
            part.name = grab("name=");
            part.filename = grab("filename=");
        }

        size_t content_start = head_end + skip;
        size_t next = body.find(delim, content_start);
        if (next == std::string::npos) return false;
        size_t content_end = next;
        // Strip the CRLF that precedes the boundary.
        if (content_end >= 2 && body.compare(content_end - 2, 2, "\r\n") == 0)
            content_end -= 2;
        else if (content_end >= 1 && body[content_end - 1] == '\n')
            content_end -= 1;
        part.content = body.substr(content_start, content_end - content_start);
        parts->push_back(std::move(part));
        pos = next + delim.size();
    }
    return true;
}

std::map<std::string, std::string> parse_urlencoded(const std::string& body) {
    std::map<std::string, std::string> out;
    size_t pos = 0;
    while (pos <= body.size()) {
        size_t amp = body.find('&', pos);
        std::string pair =
            amp == std::string::npos ? body.substr(pos) : body.substr(pos, amp - pos);
        auto eq = pair.find('=');
        if (eq != std::string::npos)
            out[url_decode(pair.substr(0, eq))] = url_decode(pair.substr(eq + 1));
        else if (!pair.empty())
            out[url_decode(pair)] = "";
        if (amp == std::string::npos) break;
        pos = amp + 1;
    }
    return out;
}

std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name) {
        bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                  c == '.' || c == '_' || c == '-';
        if (ok) out.push_back(c);
    }
    // Drop leading dots so uploads cannot hide or alias "." entries.
    while (!out.empty() && out.front() == '.') out.erase(out.begin());
    if (out.empty()) out = "upload.bin";
    return out;
}

} // namespace droidpot::web
