#include <doctest.h>

#include "core/sha256.hpp"
#include "test_util.hpp"
#include "traps/http.hpp"
#include "traps/web_trap.hpp"
#include "vfs/overlay.hpp"

using namespace droidpot;
using namespace droidpot::web;
using droidpot::test::FakeStream;
using droidpot::test::TempDir;

namespace {

std::shared_ptr<const vfs::FsImage> web_image() {
    vfs::ManifestError error;
    auto image = vfs::load_base_image(R"([{"path": "/sdcard", "kind": "dir"}])", &error);
    REQUIRE(image);
    return *image;
}

struct WebHarness {
    ManualClock clock{1351756800000};
    EventSink sink{*Vantage::parse("umts"), ExclusionSet{}, clock};
    SessionRegistry registry{clock};
    ArtifactStore artifacts;
    std::shared_ptr<const vfs::FsImage> image = web_image();
    RequestLog log;
    WebTrapConfig config;
    std::unique_ptr<WebTrap> trap;

    WebHarness() {
        config.port = 8080;
        trap = std::make_unique<WebTrap>(config, sink, registry, artifacts, image, clock, &log);
    }

    std::string serve(const std::string& raw) {
        FakeStream stream(raw);
        net::Endpoint peer{*IpAddr::parse("203.0.113.50"), 41000};
        trap->handle_connection(stream, peer);
        return stream.written();
    }
};

std::string multipart_upload(const std::string& filename, const std::string& content,
                             const std::string& field = "file") {
    std::string boundary = "----testboundary42";
    std::string body = "--" + boundary + "\r\n";
    body += "Content-Disposition: form-data; name=\"" + field + "\"; filename=\"" + filename +
            "\"\r\n";
    body += "Content-Type: application/octet-stream\r\n\r\n";
    body += content;
    body += "\r\n--" + boundary + "--\r\n";
    std::string req = "POST /upload HTTP/1.1\r\nHost: x\r\n";
    req += "Content-Type: multipart/form-data; boundary=" + boundary + "\r\n";
    req += "Content-Length: " + std::to_string(body.size()) + "\r\n";
    req += "Connection: close\r\n\r\n";
    req += body;
    return req;
}

} // namespace

TEST_CASE("http request parsing") {
    FakeStream s("GET /upload?x=1 HTTP/1.1\r\nHost: phone\r\nUser-Agent: curl\r\n\r\n");
    HttpRequest req;
    CHECK(read_request(s, &req, 1000) == ReadStatus::ok);
    CHECK(req.method == "GET");
    CHECK(req.path == "/upload");
    CHECK(req.query == "x=1");
    CHECK(req.header("host") == "phone");
    CHECK(req.keep_alive);

    FakeStream bad("NOT-HTTP\r\n\r\n");
    CHECK(read_request(bad, &req, 1000) == ReadStatus::malformed);

    FakeStream lower("get / HTTP/1.1\r\n\r\n");
    CHECK(read_request(lower, &req, 1000) == ReadStatus::malformed);

    FakeStream huge("GET / HTTP/1.1\r\nContent-Length: 999999999\r\n\r\n");
    CHECK(read_request(huge, &req, 1000, 1024) == ReadStatus::body_too_large);

    FakeStream body_req("POST /x HTTP/1.0\r\nContent-Length: 4\r\n\r\nabcd");
    CHECK(read_request(body_req, &req, 1000) == ReadStatus::ok);
    CHECK(req.body == "abcd");
    CHECK_FALSE(req.keep_alive);
}

TEST_CASE("filename sanitizer") {
    CHECK(sanitize_filename("a b?.sh") == "ab.sh");
    CHECK(sanitize_filename("x.php") == "x.php");
    CHECK(sanitize_filename("../../etc/passwd") == "etcpasswd");
    CHECK(sanitize_filename("???") == "upload.bin");
    CHECK(sanitize_filename("") == "upload.bin");
    CHECK(sanitize_filename("..") == "upload.bin");
}

TEST_CASE("multipart parsing") {
    std::string boundary = "BBB";
    std::string body = "--BBB\r\nContent-Disposition: form-data; name=\"file\"; "
                       "filename=\"x.php\"\r\n\r\n<?php ?>\r\n--BBB--\r\n";
    std::vector<MultipartPart> parts;
    REQUIRE(parse_multipart("multipart/form-data; boundary=BBB", body, &parts));
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].name == "file");
    CHECK(parts[0].filename == "x.php");
    CHECK(parts[0].content == "<?php ?>");

    CHECK_FALSE(parse_multipart("text/plain", body, &parts));
    CHECK_FALSE(parse_multipart("multipart/form-data; boundary=CCC", "garbage", &parts));
}

TEST_CASE("web routes: index, upload form, 404") {
    WebHarness h;
    std::string index = h.serve("GET / HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n");
    CHECK(index.find("200 OK") != std::string::npos);
    CHECK(index.find("Droid Media Server") != std::string::npos);

    std::string form = h.serve("GET /upload HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n");
    CHECK(form.find("200 OK") != std::string::npos);
    CHECK(form.find("enctype=\"multipart/form-data\"") != std::string::npos);
    CHECK(form.find("name=\"file\"") != std::string::npos);

    std::string missing =
        h.serve("GET /secret/panel HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n");
    CHECK(missing.find("404 Not Found") != std::string::npos);
    CHECK(missing.find("/secret/panel") != std::string::npos);

    // no response discloses a host path
    CHECK(missing.find("/tmp/") == std::string::npos);
    CHECK(missing.find("/home/") == std::string::npos);
}

TEST_CASE("upload stores artifact and virtual file") {
    WebHarness h;
    std::string response = h.serve(multipart_upload("x.php", "<?php evil ?>"));
    CHECK(response.find("200 OK") != std::string::npos);
    CHECK(response.find("/sdcard/upload/x.php") != std::string::npos);
    CHECK(h.artifacts.contains(Sha256::of("<?php evil ?>")));

    // event for the connection exists
    CHECK(h.sink.last_event_id() == 1);

    // sanitized name echoed
    std::string odd = h.serve(multipart_upload("a b?.sh", "x"));
    CHECK(odd.find("/sdcard/upload/ab.sh") != std::string::npos);

    // identical bytes twice -> one blob
    h.serve(multipart_upload("again.php", "<?php evil ?>"));
    CHECK(h.artifacts.blob_count() == 2); // "<?php evil ?>" and "x"

    // missing file part -> 400
    std::string no_part = h.serve(multipart_upload("y.php", "data", "other"));
    CHECK(no_part.find("400 Bad Request") != std::string::npos);
}

TEST_CASE("admin page logs credentials and always rejects") {
    WebHarness h;
    std::string body = "user=admin&password=letmein";
    std::string response = h.serve("POST /admin HTTP/1.1\r\nHost: x\r\nContent-Length: " +
                                   std::to_string(body.size()) +
                                   "\r\nConnection: close\r\n\r\n" + body);
    CHECK(response.find("Invalid credentials") != std::string::npos);

    // credentials landed in the transcript
    auto transcript = h.registry.transcript(1);
    REQUIRE(transcript);
    REQUIRE(transcript->login_attempts.size() == 1);
    CHECK(transcript->login_attempts[0].username == "admin");
    CHECK(transcript->login_attempts[0].password == "letmein");
    CHECK(transcript->login_attempts[0].outcome == LoginAttempt::Outcome::rejected);
}

TEST_CASE("malformed request line gets 400 and still counts") {
    WebHarness h;
    std::string response = h.serve("\x01\x02garbage\r\n\r\n");
    CHECK(response.find("400 Bad Request") != std::string::npos);
    CHECK(h.sink.last_event_id() == 1);
}

TEST_CASE("oversize upload gets 413, nothing stored") {
    WebHarness h;
    std::string response = h.serve("POST /upload HTTP/1.1\r\nHost: x\r\n"
                                   "Content-Type: multipart/form-data; boundary=B\r\n"
                                   "Content-Length: 17825792\r\n\r\n");
    CHECK(response.find("413") != std::string::npos);
    CHECK(h.artifacts.blob_count() == 0);
}

TEST_CASE("keep-alive: one event, many records") {
    WebHarness h;
    std::string two = "GET / HTTP/1.1\r\nHost: x\r\n\r\n"
                      "GET /upload HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n";
    std::string response = h.serve(two);
    // two responses on one connection
    size_t first = response.find("200 OK");
    size_t second = response.find("200 OK", first + 1);
    CHECK(second != std::string::npos);
    CHECK(h.sink.last_event_id() == 1);
    auto transcript = h.registry.transcript(1);
    REQUIRE(transcript);
    CHECK(transcript->commands.size() == 2);
}

// Traversal safety: resolved virtual paths stay inside the root.
TEST_CASE("path traversal is normalized inside the virtual root") {
    WebHarness h;
    std::string response =
        h.serve("GET /../../etc/passwd HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n");
    CHECK(response.find("404 Not Found") != std::string::npos);

    std::mt19937_64 rng(41);
    const char* fragments[] = {"..", ".", "etc", "passwd", "%2e%2e", "a", ""};
    for (int i = 0; i < 300; i++) {
        std::string path = "/";
        int n = 1 + static_cast<int>(rng() % 5);
        for (int k = 0; k < n; k++) {
            path += fragments[rng() % 7];
            path += "/";
        }
        std::string normalized = vfs::normalize_path(url_decode(path), "/");
        REQUIRE(!normalized.empty());
        CHECK(normalized[0] == '/');
        CHECK(normalized.find("..") == std::string::npos);
    }
}
