#include <doctest.h>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>

#include "core/base64.hpp"
#include "vfs/image.hpp"
#include "vfs/overlay.hpp"

using namespace droidpot;
using namespace droidpot::vfs;

namespace {

std::shared_ptr<const FsImage> test_image() {
    std::string manifest = R"JSON({
      "version": "test-1",
      "entries": [
        {"path": "/system/bin/ls", "kind": "file", "mode": "0755"},
        {"path": "/system/bin/sh", "kind": "file", "mode": "0755"},
        {"path": "/etc/hostname", "kind": "file", "content_b64": ")JSON" +
                           base64_encode("android\n") + R"JSON("},
        {"path": "/sdcard/DCIM/photo1.jpg", "kind": "file"},
        {"path": "/sdcard/DCIM/photo2.jpg", "kind": "file"},
        {"path": "/tmp", "kind": "dir"},
        {"path": "/tmp/a/f", "kind": "file"},
        {"path": "/data/local", "kind": "dir"},
        {"path": "/sdcard/music", "kind": "symlink", "target": "/sdcard/Music"},
        {"path": "/sdcard/Music", "kind": "dir"},
        {"path": "/loop1", "kind": "symlink", "target": "/loop2"},
        {"path": "/loop2", "kind": "symlink", "target": "/loop1"}
      ]
    })JSON";
    ManifestError error;
    auto image = load_base_image(manifest, &error);
    REQUIRE_MESSAGE(image, error.message);
    return *image;
}

} // namespace

TEST_CASE("manifest load: implied parents, empty, duplicates, relative") {
    ManifestError error;

    auto image = load_base_image(R"([{"path": "/sdcard/DCIM/photo1.jpg", "kind": "file"}])",
                                 &error);
    REQUIRE(image);
    const FsNode* dcim = (*image)->lookup("/sdcard/DCIM");
    REQUIRE(dcim);
    CHECK(dcim->kind == FsNode::Kind::dir);

    auto empty = load_base_image("[]", &error);
    REQUIRE(empty);
    CHECK((*empty)->lookup("/") != nullptr);
    CHECK((*empty)->root.children.empty());

    CHECK_FALSE(load_base_image(
        R"([{"path": "/system/bin/sh"}, {"path": "/system/bin/sh"}])", &error));
    CHECK(error.message.find("duplicate path") != std::string::npos);
    CHECK(error.message.find("/system/bin/sh") != std::string::npos);

    CHECK_FALSE(load_base_image(R"([{"path": "relative/x"}])", &error));
    CHECK(error.message.find("relative") != std::string::npos);

    CHECK_FALSE(load_base_image(R"([{"path": "/x", "kind": "symlink"}])", &error));
    CHECK_FALSE(load_base_image(R"([{"path": "/x", "bogus_key": 1}])", &error));
    CHECK_FALSE(load_base_image("not json", &error));
}

TEST_CASE("shipped manifest: skeleton, decoys, emulated binaries") {
    ManifestError error;
    auto image = load_base_image_file(std::string(DROIDPOT_ASSETS_DIR) +
                                          "/android-manifest.json",
                                      &error);
    REQUIRE_MESSAGE(image, error.message);
    CHECK((*image)->manifest_version == "android-4.0-default");
    CHECK((*image)->exec_whitelist.count("/system/bin/ls") == 1);
    CHECK((*image)->exec_whitelist.count("/bin/sh") == 1);

    OverlayFs fs(*image);
    for (const char* p : {"/system", "/system/bin", "/system/app", "/data", "/data/data",
                          "/data/local", "/sdcard", "/sdcard/DCIM", "/proc", "/etc",
                          "/mnt/sdcard", "/bin", "/usr", "/var", "/tmp", "/root", "/home"}) {
        auto r = fs.resolve(p);
        REQUIRE_MESSAGE(r.ok(), p);
        CHECK(r.node.kind == FsNode::Kind::dir);
    }
    // photo and address-book decoys are browsable
    std::vector<OverlayFs::DirEntry> photos;
    REQUIRE(fs.list("/sdcard/DCIM/Camera", &photos) == FsError::none);
    CHECK(photos.size() == 3);
    auto contacts =
        fs.resolve("/data/data/com.android.providers.contacts/databases/contacts2.db");
    REQUIRE(contacts.ok());
    CHECK(contacts.node.content->rfind("SQLite format 3", 0) == 0);
    // /mnt/sdcard mirrors /sdcard through the symlink
    auto via_mnt = fs.resolve("/mnt/sdcard/DCIM/Camera/IMG_20121014_171553.jpg");
    REQUIRE(via_mnt.ok());
    CHECK(via_mnt.node.resolved_path == "/sdcard/DCIM/Camera/IMG_20121014_171553.jpg");
}

TEST_CASE("path normalization") {
    CHECK(normalize_path("/", "/") == "/");
    CHECK(normalize_path("a/../a/./f", "/tmp") == "/tmp/a/f");
    CHECK(normalize_path("../../..", "/tmp") == "/");
    CHECK(normalize_path("/a//b///c", "/") == "/a/b/c");
    CHECK(normalize_path(".", "/data/local") == "/data/local");
    CHECK(normalize_path("..", "/data/local") == "/data");

    // idempotence + reference-oracle comparison over random paths
    std::mt19937_64 rng(17);
    const char* parts[] = {"a", "b", "cc", ".", "..", "f.txt", ""};
    for (int i = 0; i < 1000; i++) {
        std::string path = rng() % 2 ? "/" : "";
        int n = 1 + static_cast<int>(rng() % 6);
        for (int k = 0; k < n; k++) {
            path += parts[rng() % 7];
            if (k + 1 < n) path += "/";
        }
        std::string cwd = rng() % 2 ? "/tmp" : "/data/local";
        std::string mine = normalize_path(path, cwd);
        CHECK(normalize_path(mine, cwd) == mine); // idempotent

        // independent oracle: std::filesystem lexical normalization
        std::filesystem::path joined =
            path.size() && path[0] == '/' ? std::filesystem::path(path)
                                          : std::filesystem::path(cwd) / path;
        std::string expected = joined.lexically_normal().string();
        while (expected.size() > 1 && expected.back() == '/') expected.pop_back();
        if (expected.empty()) expected = "/";
        CHECK_MESSAGE(mine == expected, "path=", path, " cwd=", cwd);
    }
}

TEST_CASE("overlay resolve: delta shadows base, tombstones hide") {
    auto image = test_image();
    OverlayFs fs(image);

    auto root = fs.resolve("/");
    REQUIRE(root.ok());
    CHECK(root.node.kind == FsNode::Kind::dir);

    auto hostname = fs.resolve("/etc/hostname");
    REQUIRE(hostname.ok());
    CHECK(*hostname.node.content == "android\n");
    CHECK(hostname.node.from_base);

    // overwrite of a base file shadows it; a fresh overlay still sees the original
    REQUIRE(fs.write_file("/etc/hostname", "owned\n") == FsError::none);
    CHECK(*fs.resolve("/etc/hostname").node.content == "owned\n");
    CHECK_FALSE(fs.resolve("/etc/hostname").node.session_created);
    OverlayFs fresh(image);
    CHECK(*fresh.resolve("/etc/hostname").node.content == "android\n");

    // relative resolution against cwd
    REQUIRE(fs.set_cwd("/tmp") == FsError::none);
    auto via_dots = fs.resolve("a/../a/./f");
    REQUIRE(via_dots.ok());
    CHECK(via_dots.node.resolved_path == "/tmp/a/f");

    // symlinks follow, loops bounded
    auto music = fs.resolve("/sdcard/music");
    REQUIRE(music.ok());
    CHECK(music.node.resolved_path == "/sdcard/Music");
    CHECK(fs.resolve("/loop1").error == FsError::symlink_loop);

    // path through a file
    CHECK(fs.resolve("/etc/hostname/x").error == FsError::not_a_directory);
    CHECK(fs.resolve("/nonexistent/x").error == FsError::not_found);
}

TEST_CASE("overlay write semantics") {
    auto image = test_image();
    OverlayFs fs(image);

    auto e = fs.write_file("/data/local/bot", "payload");
    CHECK(e == FsError::none);
    auto bot = fs.resolve("/data/local/bot");
    REQUIRE(bot.ok());
    CHECK(bot.node.session_created);
    CHECK_FALSE(bot.node.from_base);

    CHECK(fs.write_file("/nonexistent/x", "b") == FsError::no_such_directory);
    CHECK(fs.write_file("/etc/hostname/x", "b") == FsError::not_a_directory);
    CHECK(fs.write_file("/tmp", "b") == FsError::is_directory);

    // session isolation of writes
    OverlayFs other(image);
    CHECK(other.resolve("/data/local/bot").error == FsError::not_found);
}

TEST_CASE("overlay remove semantics") {
    auto image = test_image();
    OverlayFs fs(image);

    REQUIRE(fs.remove("/etc/hostname", false) == FsError::none);
    CHECK(fs.resolve("/etc/hostname").error == FsError::not_found);

    // remove then write: the new file wins
    REQUIRE(fs.write_file("/etc/hostname", "new") == FsError::none);
    CHECK(*fs.resolve("/etc/hostname").node.content == "new");

    CHECK(fs.remove("/", false) == FsError::refused);
    CHECK(fs.remove("/does-not-exist", false) == FsError::not_found);
    CHECK(fs.remove("/sdcard/DCIM", false) == FsError::dir_not_empty);
    CHECK(fs.remove("/sdcard/DCIM", true) == FsError::none);
    CHECK(fs.resolve("/sdcard/DCIM/photo1.jpg").error == FsError::not_found);

    // other sessions unaffected
    OverlayFs other(image);
    CHECK(other.resolve("/etc/hostname").ok());
    CHECK(*other.resolve("/etc/hostname").node.content == "android\n");
}

TEST_CASE("exec_check denies session files and non-whitelisted base files") {
    auto image = test_image();
    OverlayFs fs(image);

    REQUIRE(fs.write_file("/data/local/bot", "ELF") == FsError::none);
    auto denied = fs.exec_check("/data/local/bot");
    CHECK_FALSE(denied.allowed);
    CHECK(denied.reason == "permission denied");

    // chmod +x changes the mode bits but execution stays denied
    REQUIRE(fs.chmod("/data/local/bot", 0111, 0) == FsError::none);
    CHECK((fs.resolve("/data/local/bot").node.mode & 0111) == 0111);
    CHECK_FALSE(fs.exec_check("/data/local/bot").allowed);

    CHECK(fs.exec_check("/system/bin/ls").allowed);
    CHECK_FALSE(fs.exec_check("/etc/hostname").allowed);
    CHECK_FALSE(fs.exec_check("/missing").allowed);
    CHECK(fs.exec_check("/missing").reason == "no such file");

    // overwriting a whitelisted binary kills its exec permission
    REQUIRE(fs.write_file("/system/bin/ls", "trojan") == FsError::none);
    CHECK_FALSE(fs.exec_check("/system/bin/ls").allowed);
}

TEST_CASE("overlay delta is bounded") {
    auto image = test_image();
    OverlayFs fs(image, 1024);
    CHECK(fs.write_file("/tmp/a1", std::string(600, 'x')) == FsError::none);
    CHECK(fs.write_file("/tmp/a2", std::string(600, 'x')) == FsError::no_space);
    // overwriting the same path reuses its accounting
    CHECK(fs.write_file("/tmp/a1", std::string(900, 'y')) == FsError::none);
    CHECK(fs.delta_bytes() == 900);
    fs.remove("/tmp/a1", false);
    CHECK(fs.delta_bytes() == 0);
}

TEST_CASE("listing merges base and delta") {
    auto image = test_image();
    OverlayFs fs(image);
    fs.write_file("/sdcard/DCIM/stolen.jpg", "x");
    fs.remove("/sdcard/DCIM/photo1.jpg", false);

    std::vector<OverlayFs::DirEntry> entries;
    REQUIRE(fs.list("/sdcard/DCIM", &entries) == FsError::none);
    std::vector<std::string> names;
    for (auto& e : entries) names.push_back(e.name);
    CHECK(names == std::vector<std::string>{"photo2.jpg", "stolen.jpg"});
}

// Property: randomized interleaved op sequences across sessions never leak
// between overlays and never mutate the base image.
TEST_CASE("session isolation and copy-on-write purity under random ops") {
    auto image = test_image();
    std::mt19937_64 rng(23);
    const char* paths[] = {"/tmp/x",        "/tmp/y",      "/etc/hostname",
                           "/data/local/b", "/sdcard/DCIM/photo1.jpg"};

    for (int round = 0; round < 60; round++) {
        std::vector<std::unique_ptr<OverlayFs>> sessions;
        for (int s = 0; s < 4; s++) sessions.push_back(std::make_unique<OverlayFs>(image));

        // A shadow model per session: path -> expected content (nullopt = removed)
        std::vector<std::map<std::string, std::optional<std::string>>> model(4);

        for (int op = 0; op < 50; op++) {
            size_t s = rng() % sessions.size();
            const char* path = paths[rng() % 5];
            switch (rng() % 3) {
            case 0: {
                std::string content = "c" + std::to_string(rng() % 1000);
                if (sessions[s]->write_file(path, content) == FsError::none)
                    model[s][path] = content;
                break;
            }
            case 1:
                if (sessions[s]->remove(path, true) == FsError::none)
                    model[s][path] = std::nullopt;
                break;
            case 2: {
                auto r = sessions[s]->resolve(path);
                auto it = model[s].find(path);
                if (it != model[s].end()) {
                    if (it->second.has_value()) {
                        REQUIRE(r.ok());
                        CHECK(*r.node.content == *it->second);
                    } else {
                        CHECK(r.error == FsError::not_found);
                    }
                }
                break;
            }
            }
        }
        // cross-session: every session sees only its own model
        for (size_t s = 0; s < sessions.size(); s++) {
            for (const auto& [path, expected] : model[s]) {
                auto r = sessions[s]->resolve(path);
                if (expected.has_value()) {
                    REQUIRE(r.ok());
                    CHECK(*r.node.content == *expected);
                } else {
                    CHECK(r.error == FsError::not_found);
                }
            }
        }
        // copy-on-write purity: a fresh overlay sees pristine base content
        OverlayFs fresh(image);
        CHECK(*fresh.resolve("/etc/hostname").node.content == "android\n");
        CHECK(fresh.resolve("/sdcard/DCIM/photo1.jpg").ok());
        CHECK(fresh.resolve("/tmp/x").error == FsError::not_found);
    }
}
