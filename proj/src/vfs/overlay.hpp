#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vfs/image.hpp"

namespace droidpot::vfs {

enum class FsError : uint8_t {
    none,
    not_found,
    not_a_directory,
    no_such_directory,
    is_directory,
    dir_not_empty,
    symlink_loop,
    no_space,
    refused,
    exists,
};

const char* to_string(FsError e);

// Read-only view of a resolved node; content points into the base image or
// the overlay delta and stays valid while the overlay is unmodified.
struct NodeView {
    FsNode::Kind kind = FsNode::Kind::file;
    uint32_t mode = 0;
    FsNode::Owner owner = FsNode::Owner::root;
    TimestampMs mtime = 0;
    bool session_created = false;
    bool from_base = false;
    const std::string* content = nullptr;
    std::string resolved_path; // normalized, symlinks resolved
};

struct Resolved {
    FsError error = FsError::none;
    NodeView node;
    bool ok() const { return error == FsError::none; }
};

struct ExecDecision {
    bool allowed = false;
    std::string reason; // "permission denied" / "no such file"
};

// Per-session copy-on-write view over a shared immutable base image.
// Lookups consult the delta first (tombstones hide base nodes); the base is
// never mutated.
class OverlayFs {
  public:
    static constexpr size_t kDefaultDeltaCap = 64 * 1024 * 1024;
    static constexpr int kMaxSymlinkDepth = 16;

    explicit OverlayFs(std::shared_ptr<const FsImage> base,
                       size_t delta_cap_bytes = kDefaultDeltaCap);

    const std::string& cwd() const { return cwd_; }
    // Fails unless the target resolves to a directory.
    FsError set_cwd(const std::string& path);

    Resolved resolve(const std::string& path) const;

    // Directory listing in overlay view, sorted by name.
    struct DirEntry {
        std::string name;
        NodeView node;
    };
    FsError list(const std::string& path, std::vector<DirEntry>* out) const;

    FsError write_file(const std::string& path, std::string bytes);
    FsError append_file(const std::string& path, const std::string& bytes);
    FsError mkdir(const std::string& path, bool parents);
    FsError remove(const std::string& path, bool recursive);
    FsError copy(const std::string& from, const std::string& to);
    FsError move(const std::string& from, const std::string& to);
    FsError chmod(const std::string& path, uint32_t set_bits, uint32_t clear_bits);
    FsError touch(const std::string& path);

    // Allowed only for unshadowed base files on the image's whitelist;
    // anything session-created is denied.
    ExecDecision exec_check(const std::string& path) const;

    size_t delta_bytes() const { return delta_bytes_; }
    size_t delta_entries() const { return delta_.size(); }
    void set_clock(const Clock* clock) { clock_ = clock; }

  private:
    struct DeltaEntry {
        bool tombstone = false;
        FsNode node; // children unused; delta dirs list via path prefixes
    };

    // Single-level lookup of a normalized absolute path (no symlink follow).
    const FsNode* lookup_raw(const std::string& abs_path, bool* from_base,
                             bool* tombstoned) const;
    Resolved resolve_internal(const std::string& abs_path, int depth) const;
    bool base_has(const std::string& abs_path) const;
    bool overlay_dir_has_children(const std::string& abs_path) const;
    FsError put_node(const std::string& abs_path, FsNode node);
    TimestampMs now() const;

    std::shared_ptr<const FsImage> base_;
    size_t delta_cap_;
    size_t delta_bytes_ = 0;
    std::map<std::string, DeltaEntry> delta_; // key: normalized absolute path
    std::string cwd_ = "/";
    const Clock* clock_ = nullptr;
};

} // namespace droidpot::vfs
