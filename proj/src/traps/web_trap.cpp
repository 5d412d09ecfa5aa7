#include "traps/web_trap.hpp"

#include <fstream>

#include <json.hpp>

#include "vfs/overlay.hpp"

namespace droidpot::web {

namespace {

const char* kIndexPage =
    "<html><head><title>Droid Media Server</title></head><body>"
    "<h1>Droid Media Server</h1>"
    "<p>Shared folders: <a href=\"/sdcard/DCIM\">DCIM</a>, "
    "<a href=\"/sdcard/Music\">Music</a></p>"
    "<p><a href=\"/upload\">Upload media</a> &middot; <a href=\"/admin\">Admin</a></p>"
    "</body></html>";

const char* kUploadPage =
    "<html><head><title>Upload - Droid Media Server</title></head><body>"
    "<h1>Upload media</h1>"
    "<form action=\"/upload\" method=\"POST\" enctype=\"multipart/form-data\">"
    "<input type=\"file\" name=\"file\">"
    "<input type=\"submit\" value=\"Upload\">"
    "</form></body></html>";

const char* kAdminPage =
    "<html><head><title>Admin - Droid Media Server</title></head><body>"
    "<h1>Administrator login</h1>"
    "<form action=\"/admin\" method=\"POST\">"
    "User: <input type=\"text\" name=\"user\"><br>"
    "Password: <input type=\"password\" name=\"password\"><br>"
    "<input type=\"submit\" value=\"Login\">"
    "</form></body></html>";

bool has_dotdot_segment(const std::string& path) {
    size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') i++;
        size_t start = i;
        while (i < path.size() && path[i] != '/') i++;
        if (path.compare(start, i - start, "..") == 0 && i - start == 2) return true;
    }
    return false;
}

} // namespace

WebTrap::WebTrap(WebTrapConfig config, EventSink& sink, SessionRegistry& sessions,
                 ArtifactStore& artifacts, std::shared_ptr<const vfs::FsImage> base, Clock& clock,
                 RequestLog* request_log)
    : config_(std::move(config)), sink_(sink), sessions_(sessions), artifacts_(artifacts),
      base_(std::move(base)), clock_(clock), request_log_(request_log) {}

WebTrap::~WebTrap() { stop(); }

bool WebTrap::start(std::string* error) {
    if (!listener_.open(config_.bind_addr, config_.port, error)) return false;
    stopping_ = false;
    accept_thread_ = std::thread([this] { accept_loop(); });
    return true;
}

void WebTrap::stop() {
    stopping_ = true;
    if (accept_thread_.joinable()) accept_thread_.join();
    listener_.close();
    workers_.wait_idle(5'000);
}

void WebTrap::accept_loop() {
    while (!stopping_) {
        auto conn = listener_.accept(250);
        if (!conn) continue;
        workers_.launch([this, c = std::make_shared<net::TcpConn>(std::move(*conn))] {
            handle_connection(*c, c->peer());
        });
    }
}

void WebTrap::handle_connection(net::ByteStream& stream, const net::Endpoint& peer) {
    ConnMeta meta;
    meta.transport = Transport::tcp;
    meta.src_ip = peer.ip;
    meta.src_port = peer.port;
    meta.dst_port = config_.port;
    meta.service = Service::web;

    uint64_t sid = sessions_.allocate_session_id();
    AttackEvent event = sink_.record(meta, sid);
    auto session = sessions_.open_session(event, nullptr);
    if (!session) return;

    vfs::OverlayFs overlay(base_);
    overlay.set_clock(&clock_);

    std::string carry;
    for (int served = 0; served < config_.max_requests_per_conn && !stopping_; served++) {
        HttpRequest req;
        ReadStatus rs = read_request(stream, &req, config_.idle_timeout_ms, kMaxBodyBytes, &carry);
        if (rs == ReadStatus::closed || rs == ReadStatus::timeout) break;

        RequestOutcome outcome;
        if (rs == ReadStatus::malformed || rs == ReadStatus::header_too_large) {
            outcome.status = 400;
            outcome.response = make_response(
                400, "text/html", "<html><body><h1>400 Bad Request</h1></body></html>", false);
            req.method = "-";
            req.keep_alive = false;
        } else if (rs == ReadStatus::body_too_large) {
            outcome.status = 413;
            outcome.response =
                make_response(413, "text/html",
                              "<html><body><h1>413 Request Entity Too Large</h1></body></html>",
                              false);
            req.keep_alive = false;
        } else {
            outcome = route(req, overlay, session);
        }

        nlohmann::ordered_json record;
        record["ts"] = format_rfc3339_ms(clock_.now_ms());
        record["src"] = peer.to_string();
        record["method"] = req.method;
        record["path"] = printable_escape(req.path, 2048);
        record["query"] = printable_escape(req.query, 1024);
        record["host"] = req.header("host");
        record["user_agent"] = req.header("user-agent");
        record["content_length"] = req.header("content-length");
        record["body_size"] = req.body.size();
        record["status"] = outcome.status;
        record["traversal_attempt"] = outcome.traversal_attempt;
        record["session"] = sid;
        if (!req.body.empty() && outcome.upload_bytes == 0)
            record["body_preview"] = printable_escape(req.body, 4096);
        if (request_log_) request_log_->append(record.dump());

        session->record_command(req.method + " " + printable_escape(req.raw_target, 2048),
                                std::to_string(outcome.status), 0);

        if (!stream.write_all(outcome.response)) break;
        if (!req.keep_alive) break;
    }
    session->close();
}

WebTrap::RequestOutcome WebTrap::route(const HttpRequest& req, vfs::OverlayFs& overlay,
                                       std::shared_ptr<SessionHandle> session) {
    RequestOutcome out;
    std::string normalized = vfs::normalize_path(req.path.empty() ? "/" : req.path, "/");
    out.traversal_attempt = has_dotdot_segment(req.path);

    if (req.method == "GET" && normalized == "/") {
        out.status = 200;
        out.response = make_response(200, "text/html", kIndexPage, req.keep_alive);
        return out;
    }
    if (req.method == "GET" && normalized == "/upload") {
        out.status = 200;
        out.response = make_response(200, "text/html", kUploadPage, req.keep_alive);
        return out;
    }
    if (req.method == "GET" && normalized == "/admin") {
        out.status = 200;
        out.response = make_response(200, "text/html", kAdminPage, req.keep_alive);
        return out;
    }
    if (req.method == "POST" && normalized == "/admin") {
        auto form = parse_urlencoded(req.body);
        session->record_login(form.count("user") ? form["user"] : "",
                              form.count("password") ? form["password"] : "",
                              LoginAttempt::Outcome::rejected);
        out.status = 200;
        out.response = make_response(
            200, "text/html",
            "<html><body><h1>Administrator login</h1><p>Invalid credentials.</p></body></html>",
            req.keep_alive);
        return out;
    }
    if (req.method == "POST" && normalized == "/upload") {
        std::vector<MultipartPart> parts;
        if (!parse_multipart(req.header("content-type"), req.body, &parts)) {
            out.status = 400;
            out.response = make_response(
                400, "text/html", "<html><body><h1>400 Bad Request</h1></body></html>",
                req.keep_alive);
            return out;
        }
        const MultipartPart* file_part = nullptr;
        for (const auto& p : parts)
            if (p.name == "file") file_part = &p;
        if (!file_part) {
            out.status = 400;
            out.response = make_response(
                400, "text/html",
                "<html><body><h1>400 Bad Request</h1><p>missing file part</p></body></html>",
                req.keep_alive);
            return out;
        }

        std::string name = sanitize_filename(file_part->filename);
        ArtifactOrigin origin;
        origin.kind = ArtifactOrigin::Kind::web_upload;
        origin.form_field = "file";
        origin.filename = name;
        auto artifact = artifacts_.store(file_part->content, origin, session->session_id(),
                                         clock_.now_ms());
        session->record_artifact(artifact.digest);

        overlay.mkdir("/sdcard/upload", true);
        std::string vpath = "/sdcard/upload/" + name;
        overlay.write_file(vpath, file_part->content);
        out.status = 200;
        out.upload_bytes = file_part->content.size();
        out.response = make_response(
            200, "text/html",
            "<html><body><h1>Upload complete</h1><p>Stored as " + html_escape(vpath) +
                " (" + std::to_string(file_part->content.size()) + " bytes)</p></body></html>",
            req.keep_alive);
        return out;
    }

    out.status = 404;
    out.response = make_response(
        404, "text/html",
        "<html><body><h1>404 Not Found</h1><p>The requested URL " +
            html_escape(printable_escape(req.raw_target, 2048)) +
            " was not found on this server.</p></body></html>",
        req.keep_alive);
    return out;
}

} // namespace droidpot::web
