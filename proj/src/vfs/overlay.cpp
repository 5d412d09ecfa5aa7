#include "vfs/overlay.hpp"

#include <algorithm>

namespace droidpot::vfs {

namespace {

std::string join_child(const std::string& dir, const std::string& name) {
    if (dir == "/") return "/" + name;
    return dir + "/" + name;
}

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

NodeView view_of(const FsNode& n, bool from_base, std::string resolved_path) {
    NodeView v;
    v.kind = n.kind;
    v.mode = n.mode;
    v.owner = n.owner;
    v.mtime = n.mtime;
    v.session_created = n.session_created;
    v.from_base = from_base;
    v.content = &n.content;
    v.resolved_path = std::move(resolved_path);
    return v;
}

} // namespace

const char* to_string(FsError e) {
    switch (e) {
    case FsError::none: return "ok";
    case FsError::not_found: return "no such file or directory";
    case FsError::not_a_directory: return "not a directory";
    case FsError::no_such_directory: return "no such directory";
    case FsError::is_directory: return "is a directory";
    case FsError::dir_not_empty: return "directory not empty";
    case FsError::symlink_loop: return "too many levels of symbolic links";
    case FsError::no_space: return "no space left on device";
    case FsError::refused: return "operation not permitted";
    case FsError::exists: return "file exists";
    }
    return "error";
}

OverlayFs::OverlayFs(std::shared_ptr<const FsImage> base, size_t delta_cap_bytes)
    : base_(std::move(base)), delta_cap_(delta_cap_bytes) {}

TimestampMs OverlayFs::now() const { return clock_ ? clock_->now_ms() : kBaseEpochMs; }

const FsNode* OverlayFs::lookup_raw(const std::string& abs_path, bool* from_base,
                                    bool* tombstoned) const {
    if (tombstoned) *tombstoned = false;
    auto it = delta_.find(abs_path);
    if (it != delta_.end()) {
        if (it->second.tombstone) {
            if (tombstoned) *tombstoned = true;
            return nullptr;
        }
        if (from_base) *from_base = false;
        return &it->second.node;
    }
    if (from_base) *from_base = true;
    return base_->lookup(abs_path);
}

Resolved OverlayFs::resolve_internal(const std::string& abs_path, int depth) const {
    Resolved out;
    auto comps = split_components(abs_path);
    if (comps.empty()) {
        out.node = view_of(base_->root, true, "/");
        return out;
    }
    std::string cur = "/";
    for (size_t i = 0; i < comps.size(); i++) {
        std::string child = join_child(cur, comps[i]);
        bool from_base = false;
        const FsNode* node = lookup_raw(child, &from_base, nullptr);
        if (!node) {
            out.error = FsError::not_found;
            return out;
        }
        if (node->kind == FsNode::Kind::symlink) {
            if (depth <= 0) {
                out.error = FsError::symlink_loop;
                return out;
            }
            std::string target = normalize_path(node->content, cur);
            std::string rest;
            for (size_t k = i + 1; k < comps.size(); k++) rest += "/" + comps[k];
            return resolve_internal(normalize_path(target + rest, "/"), depth - 1);
        }
        if (i + 1 < comps.size() && node->kind != FsNode::Kind::dir) {
            out.error = FsError::not_a_directory;
            return out;
        }
        if (i + 1 == comps.size()) {
            out.node = view_of(*node, from_base, child);
            return out;
        }
        cur = child;
    }
    out.error = FsError::not_found;
    return out;
}

Resolved OverlayFs::resolve(const std::string& path) const {
    if (path.empty()) {
        Resolved r;
        r.error = FsError::not_found;
        return r;
    }
    return resolve_internal(normalize_path(path, cwd_), kMaxSymlinkDepth);
}

FsError OverlayFs::set_cwd(const std::string& path) {
    Resolved r = resolve(path);
    if (!r.ok()) return r.error;
    if (r.node.kind != FsNode::Kind::dir) return FsError::not_a_directory;
    cwd_ = r.node.resolved_path;
    return FsError::none;
}

bool OverlayFs::base_has(const std::string& abs_path) const {
    return base_->lookup(abs_path) != nullptr;
}

bool OverlayFs::overlay_dir_has_children(const std::string& abs_path) const {
    std::vector<DirEntry> entries;
    if (list(abs_path, &entries) != FsError::none) return false;
    return !entries.empty();
}

FsError OverlayFs::put_node(const std::string& abs_path, FsNode node) {
    size_t old_size = 0;
    auto it = delta_.find(abs_path);
    if (it != delta_.end() && !it->second.tombstone) old_size = it->second.node.content.size();
    size_t new_size = node.content.size();
    if (delta_bytes_ - old_size + new_size > delta_cap_) return FsError::no_space;
    delta_bytes_ = delta_bytes_ - old_size + new_size;
    delta_[abs_path] = DeltaEntry{false, std::move(node)};
    return FsError::none;
}

FsError OverlayFs::write_file(const std::string& path, std::string bytes) {
    std::string norm = normalize_path(path, cwd_);
    if (norm == "/") return FsError::is_directory;

    Resolved parent = resolve(parent_path(norm));
    if (!parent.ok()) return FsError::no_such_directory;
    if (parent.node.kind != FsNode::Kind::dir) return FsError::not_a_directory;
    std::string target = join_child(parent.node.resolved_path, base_name(norm));

    bool from_base = false;
    const FsNode* existing = lookup_raw(target, &from_base, nullptr);
    if (existing && existing->kind == FsNode::Kind::dir) return FsError::is_directory;

    FsNode node;
    node.name = base_name(target);
    node.kind = FsNode::Kind::file;
    node.content = std::move(bytes);
    node.mode = existing && existing->kind == FsNode::Kind::file ? existing->mode : 0644;
    node.mtime = now();
    node.session_created = !base_has(target);
    return put_node(target, std::move(node));
}

FsError OverlayFs::append_file(const std::string& path, const std::string& bytes) {
    Resolved r = resolve(path);
    std::string combined;
    if (r.ok()) {
        if (r.node.kind != FsNode::Kind::file) return FsError::is_directory;
        combined = *r.node.content;
    }
    combined += bytes;
    return write_file(path, std::move(combined));
}

FsError OverlayFs::mkdir(const std::string& path, bool parents) {
    std::string norm = normalize_path(path, cwd_);
    if (norm == "/") return FsError::exists;

    Resolved existing = resolve(norm);
    if (existing.ok()) {
        if (parents && existing.node.kind == FsNode::Kind::dir) return FsError::none;
        return FsError::exists;
    }

    Resolved parent = resolve(parent_path(norm));
    if (!parent.ok()) {
        if (!parents) return FsError::no_such_directory;
        FsError e = mkdir(parent_path(norm), true);
        if (e != FsError::none) return e;
        parent = resolve(parent_path(norm));
        if (!parent.ok()) return FsError::no_such_directory;
    }
    if (parent.node.kind != FsNode::Kind::dir) return FsError::not_a_directory;

    std::string target = join_child(parent.node.resolved_path, base_name(norm));
    FsNode node;
    node.name = base_name(target);
    node.kind = FsNode::Kind::dir;
    node.mode = 0755;
    node.mtime = now();
    node.session_created = !base_has(target);
    return put_node(target, std::move(node));
}

FsError OverlayFs::remove(const std::string& path, bool recursive) {
    std::string norm = normalize_path(path, cwd_);
    if (norm == "/") return FsError::refused;

    // Operate on the link itself when the leaf is a symlink.
    bool tomb = false;
    std::string target = norm;
    const FsNode* raw = lookup_raw(norm, nullptr, &tomb);
    if (!raw) {
        if (tomb) return FsError::not_found;
        Resolved r = resolve(norm);
        if (!r.ok()) return r.error;
        target = r.node.resolved_path;
        raw = lookup_raw(target, nullptr, nullptr);
        if (!raw) return FsError::not_found;
    }

    if (raw->kind == FsNode::Kind::dir && !recursive && overlay_dir_has_children(target))
        return FsError::dir_not_empty;

    // Drop delta descendants, then hide the path.
    std::string prefix = target + "/";
    for (auto it = delta_.lower_bound(prefix); it != delta_.end();) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        if (!it->second.tombstone) delta_bytes_ -= it->second.node.content.size();
        it = delta_.erase(it);
    }
    auto it = delta_.find(target);
    if (it != delta_.end()) {
        if (!it->second.tombstone) delta_bytes_ -= it->second.node.content.size();
        delta_.erase(it);
    }
    if (base_has(target)) delta_[target] = DeltaEntry{true, {}};
    return FsError::none;
}

FsError OverlayFs::copy(const std::string& from, const std::string& to) {
    Resolved src = resolve(from);
    if (!src.ok()) return src.error;
    if (src.node.kind == FsNode::Kind::dir) return FsError::is_directory;

    std::string dest = normalize_path(to, cwd_);
    Resolved dst = resolve(dest);
    if (dst.ok() && dst.node.kind == FsNode::Kind::dir)
        dest = join_child(dst.node.resolved_path, base_name(src.node.resolved_path));
    return write_file(dest, *src.node.content);
}

FsError OverlayFs::move(const std::string& from, const std::string& to) {
    FsError e = copy(from, to);
    if (e != FsError::none) return e;
    return remove(from, false);
}

FsError OverlayFs::chmod(const std::string& path, uint32_t set_bits, uint32_t clear_bits) {
    Resolved r = resolve(path);
    if (!r.ok()) return r.error;
    const std::string& target = r.node.resolved_path;

    auto it = delta_.find(target);
    if (it != delta_.end() && !it->second.tombstone) {
        it->second.node.mode = (it->second.node.mode & ~clear_bits) | set_bits;
        return FsError::none;
    }
    const FsNode* base_node = base_->lookup(target);
    if (!base_node) return FsError::not_found;
    FsNode node = *base_node; // copy-up; children stay resolvable through the base
    node.children.clear();
    node.mode = (node.mode & ~clear_bits) | set_bits;
    node.session_created = false;
    return put_node(target, std::move(node));
}

FsError OverlayFs::touch(const std::string& path) {
    Resolved r = resolve(path);
    if (!r.ok()) {
        if (r.error != FsError::not_found) return r.error;
        return write_file(path, "");
    }
    const std::string& target = r.node.resolved_path;
    auto it = delta_.find(target);
    if (it != delta_.end() && !it->second.tombstone) {
        it->second.node.mtime = now();
        return FsError::none;
    }
    const FsNode* base_node = base_->lookup(target);
    if (!base_node) return FsError::not_found;
    FsNode node = *base_node;
    node.children.clear();
    node.mtime = now();
    node.session_created = false;
    return put_node(target, std::move(node));
}

FsError OverlayFs::list(const std::string& path, std::vector<DirEntry>* out) const {
    out->clear();
    Resolved r = resolve(path);
    if (!r.ok()) return r.error;
    if (r.node.kind != FsNode::Kind::dir) return FsError::not_a_directory;
    const std::string& dir = r.node.resolved_path;

    std::map<std::string, NodeView> entries;

    const FsNode* base_dir = base_->lookup(dir);
    if (base_dir && base_dir->kind == FsNode::Kind::dir) {
        for (const auto& [name, child] : base_dir->children) {
            std::string child_path = join_child(dir, name);
            auto dit = delta_.find(child_path);
            if (dit != delta_.end()) {
                if (!dit->second.tombstone)
                    entries.emplace(name, view_of(dit->second.node, false, child_path));
                continue;
            }
            entries.emplace(name, view_of(child, true, child_path));
        }
    }

    std::string prefix = dir == "/" ? "/" : dir + "/";
    for (auto it = delta_.lower_bound(prefix); it != delta_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        std::string rest = it->first.substr(prefix.size());
        if (rest.empty() || rest.find('/') != std::string::npos) continue;
        if (it->second.tombstone) continue;
        entries.emplace(rest, view_of(it->second.node, false, it->first));
    }

    for (auto& [name, view] : entries) out->push_back(DirEntry{name, std::move(view)});
    return FsError::none;
}

ExecDecision OverlayFs::exec_check(const std::string& path) const {
    Resolved r = resolve(path);
    if (!r.ok()) return {false, "no such file"};
    if (r.node.kind != FsNode::Kind::file) return {false, "permission denied"};
    if (r.node.session_created || !r.node.from_base) return {false, "permission denied"};
    if (base_->exec_whitelist.count(r.node.resolved_path) == 0)
        return {false, "permission denied"};
    return {true, ""};
}

} // namespace droidpot::vfs
