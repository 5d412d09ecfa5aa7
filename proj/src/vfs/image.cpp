#include "vfs/image.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "core/base64.hpp"

namespace droidpot::vfs {

namespace {

std::vector<std::string> split_components(const std::string& abs_path) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < abs_path.size()) {
        while (i < abs_path.size() && abs_path[i] == '/') i++;
        size_t start = i;
        while (i < abs_path.size() && abs_path[i] != '/') i++;
        if (i > start) out.push_back(abs_path.substr(start, i - start));
    }
    return out;
}

bool parse_mode(const nlohmann::json& v, uint32_t* out) {
    if (v.is_number_unsigned()) {
        *out = v.get<uint32_t>() & 07777;
        return true;
    }
    if (v.is_string()) {
        // octal text, optionally 0-prefixed: "0755" or "755"
        const std::string s = v.get<std::string>();
        if (s.empty() || s.size() > 5) return false;
        uint32_t m = 0;
        for (char c : s) {
            if (c < '0' || c > '7') return false;
            m = m * 8 + static_cast<uint32_t>(c - '0');
        }
        *out = m & 07777;
        return true;
    }
    return false;
}

bool is_bin_dir_path(const std::string& p) {
    return p.rfind("/bin/", 0) == 0 || p.rfind("/sbin/", 0) == 0 ||
           p.rfind("/usr/bin/", 0) == 0 || p.rfind("/usr/sbin/", 0) == 0 ||
           p.rfind("/system/bin/", 0) == 0 || p.rfind("/system/xbin/", 0) == 0;
}

} // namespace

std::string normalize_path(const std::string& path, const std::string& cwd) {
    std::string joined;
    if (!path.empty() && path[0] == '/')
        joined = path;
    else
        joined = (cwd.empty() ? std::string("/") : cwd) + "/" + path;

    std::vector<std::string> stack;
    for (const auto& comp : split_components(joined)) {
        if (comp == ".") continue;
        if (comp == "..") {
            if (!stack.empty()) stack.pop_back();
            continue;
        }
        stack.push_back(comp);
    }
    std::string out = "/";
    for (size_t i = 0; i < stack.size(); i++) {
        out += stack[i];
        if (i + 1 < stack.size()) out += "/";
    }
    return out;
}

std::string parent_path(const std::string& abs_path) {
    if (abs_path == "/") return "/";
    auto slash = abs_path.rfind('/');
    if (slash == 0) return "/";
    return abs_path.substr(0, slash);
}

std::string base_name(const std::string& abs_path) {
    if (abs_path == "/") return "";
    auto slash = abs_path.rfind('/');
    return abs_path.substr(slash + 1);
}

const FsNode* FsImage::lookup(const std::string& abs_path) const {
    const FsNode* cur = &root;
    for (const auto& comp : split_components(abs_path)) {
        if (cur->kind != FsNode::Kind::dir) return nullptr;
        auto it = cur->children.find(comp);
        if (it == cur->children.end()) return nullptr;
        cur = &it->second;
    }
    return cur;
}

namespace {

// Inserts a node at abs_path, creating implied parent directories.
// Returns false (with message) when the path walks through a file.
bool insert_node(FsNode& root, const std::string& abs_path, FsNode node, std::string* message) {
    auto comps = split_components(abs_path);
    FsNode* cur = &root;
    for (size_t i = 0; i + 1 < comps.size(); i++) {
        if (cur->kind != FsNode::Kind::dir) {
            *message = "path through non-directory: " + abs_path;
            return false;
        }
        auto [it, inserted] = cur->children.try_emplace(comps[i]);
        if (inserted) {
            it->second.name = comps[i];
            it->second.kind = FsNode::Kind::dir;
            it->second.mode = 0755;
        }
        cur = &it->second;
    }
    if (comps.empty()) {
        *message = "cannot redefine /";
        return false;
    }
    if (cur->kind != FsNode::Kind::dir) {
        *message = "path through non-directory: " + abs_path;
        return false;
    }
    const std::string& leaf = comps.back();
    auto it = cur->children.find(leaf);
    if (it != cur->children.end()) {
        // Implied directories may be re-stated explicitly as dirs.
        if (it->second.kind == FsNode::Kind::dir && node.kind == FsNode::Kind::dir) {
            it->second.mode = node.mode;
            return true;
        }
        *message = "duplicate path: " + abs_path;
        return false;
    }
    node.name = leaf;
    cur->children.emplace(leaf, std::move(node));
    return true;
}

} // namespace

std::optional<std::shared_ptr<const FsImage>> load_base_image(const std::string& json_text,
                                                              ManifestError* error) {
    auto fail = [&](const std::string& msg) -> std::optional<std::shared_ptr<const FsImage>> {
        if (error) error->message = msg;
        return std::nullopt;
    };

    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) return fail("manifest is not valid JSON");

    std::string version = "unversioned";
    const nlohmann::json* entries = &doc;
    if (doc.is_object()) {
        if (!doc.contains("entries") || !doc["entries"].is_array())
            return fail("manifest object must contain an \"entries\" array");
        if (doc.contains("version")) {
            if (!doc["version"].is_string()) return fail("manifest \"version\" must be a string");
            version = doc["version"].get<std::string>();
        }
        for (auto& [key, _] : doc.items())
            if (key != "entries" && key != "version") return fail("unknown manifest key: " + key);
        entries = &doc["entries"];
    } else if (!doc.is_array()) {
        return fail("manifest must be a JSON array or {version, entries} object");
    }

    auto image = std::make_shared<FsImage>();
    image->manifest_version = version;
    image->root.name = "";
    image->root.kind = FsNode::Kind::dir;
    image->root.mode = 0755;

    std::set<std::string> seen;
    for (const auto& e : *entries) {
        if (!e.is_object()) return fail("manifest entry is not an object");
        for (auto& [key, _] : e.items()) {
            if (key != "path" && key != "kind" && key != "mode" && key != "content_b64" &&
                key != "target")
                return fail("unknown manifest entry key: " + key);
        }
        if (!e.contains("path") || !e["path"].is_string())
            return fail("manifest entry missing \"path\"");
        std::string raw_path = e["path"].get<std::string>();
        if (raw_path.empty() || raw_path[0] != '/')
            return fail("relative path in manifest: \"" + raw_path + "\"");
        std::string path = normalize_path(raw_path, "/");
        if (!seen.insert(path).second) return fail("duplicate path: " + path);

        FsNode node;
        std::string kind = e.contains("kind") ? e["kind"].get<std::string>() : "file";
        if (kind == "dir")
            node.kind = FsNode::Kind::dir;
        else if (kind == "file")
            node.kind = FsNode::Kind::file;
        else if (kind == "symlink")
            node.kind = FsNode::Kind::symlink;
        else
            return fail("unknown kind \"" + kind + "\" for " + path);

        node.mode = node.kind == FsNode::Kind::dir ? 0755 : 0644;
        if (e.contains("mode") && !parse_mode(e["mode"], &node.mode))
            return fail("bad mode for " + path);

        if (node.kind == FsNode::Kind::symlink) {
            if (!e.contains("target") || !e["target"].is_string())
                return fail("symlink without target: " + path);
            node.content = e["target"].get<std::string>();
        } else if (e.contains("target")) {
            return fail("target given for non-symlink: " + path);
        }

        if (e.contains("content_b64")) {
            if (node.kind != FsNode::Kind::file)
                return fail("content_b64 given for non-file: " + path);
            auto bytes = base64_decode(e["content_b64"].get<std::string>());
            if (!bytes) return fail("bad base64 content for " + path);
            node.content = std::move(*bytes);
        }

        std::string message;
        if (!insert_node(image->root, path, std::move(node), &message)) return fail(message);

        const FsNode* placed = image->lookup(path);
        if (placed && placed->kind == FsNode::Kind::file && (placed->mode & 0111) != 0 &&
            is_bin_dir_path(path))
            image->exec_whitelist.insert(path);
    }
    return std::shared_ptr<const FsImage>(image);
}

std::optional<std::shared_ptr<const FsImage>> load_base_image_file(const std::string& path,
                                                                   ManifestError* error) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (error) error->message = path + ": cannot open manifest";
        return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return load_base_image(buf.str(), error);
}

} // namespace droidpot::vfs
