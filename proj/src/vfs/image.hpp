#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "core/clock.hpp"

namespace droidpot::vfs {

// All base-image files carry this mtime; session writes stamp the session
// clock instead.
constexpr TimestampMs kBaseEpochMs = 1325764800000; // 2012-01-05T12:00:00Z

struct FsNode {
    enum class Kind : uint8_t { dir, file, symlink };
    enum class Owner : uint8_t { root, shell, app };

    std::string name;
    Kind kind = Kind::file;
    std::string content; // file bytes, or symlink target path
    uint32_t mode = 0644;
    Owner owner = Owner::root;
    uint32_t app_uid = 0;
    TimestampMs mtime = kBaseEpochMs;
    bool session_created = false;
    std::map<std::string, FsNode> children; // dirs only; sorted for stable listings
};

// Immutable Android-shaped base filesystem, shared by all sessions.
struct FsImage {
    FsNode root;
    std::string manifest_version;
    // Base executables an emulated shell may "run" (bin directories, +x).
    std::set<std::string> exec_whitelist;

    // Raw tree walk over normalized absolute paths; does not follow symlinks.
    const FsNode* lookup(const std::string& abs_path) const;
};

struct ManifestError {
    std::string message;
};

// Loads the fs-manifest document: either a bare JSON array of
// {path, kind, mode?, content_b64?, target?} or an object
// {"version": ..., "entries": [...]}. Implied parent directories are
// created; duplicate or relative paths are load errors.
std::optional<std::shared_ptr<const FsImage>> load_base_image(const std::string& json_text,
                                                              ManifestError* error);
std::optional<std::shared_ptr<const FsImage>> load_base_image_file(const std::string& path,
                                                                   ManifestError* error);

// Lexical normalization: resolves against cwd, folds "." and "..", clamps
// at root. Idempotent.
std::string normalize_path(const std::string& path, const std::string& cwd);

std::string parent_path(const std::string& abs_path);
std::string base_name(const std::string& abs_path);

} // namespace droidpot::vfs
