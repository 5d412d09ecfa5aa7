#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "core/clock.hpp"
#include "core/model.hpp"

namespace droidpot {

// Content-addressed blob store shared by all traps. Identical content is
// stored once; every store() call appends one reference to the index.
//
// On-disk layout:
//   <dir>/blobs/<sha256-hex>   blob bytes
//   <dir>/index.ndjson         one JSON object per reference
//
// Without open() the store keeps blobs in memory (unit tests).
class ArtifactStore {
  public:
    ArtifactStore() = default;

    bool open(const std::string& dir, std::string* error);

    CapturedArtifact store(std::string_view bytes, const ArtifactOrigin& origin,
                           std::optional<uint64_t> session_id, TimestampMs now);

    std::optional<std::string> load(const std::string& digest) const;
    bool contains(const std::string& digest) const;
    size_t blob_count() const;
    size_t reference_count() const;

  private:
    std::string blob_path(const std::string& digest) const;
    void append_index(const CapturedArtifact& a);

    mutable std::mutex mu_;
    std::string dir_; // empty = memory mode
    std::unordered_map<std::string, std::string> memory_blobs_;
    std::unordered_map<std::string, uint64_t> known_; // digest -> size
    size_t references_ = 0;
};

} // namespace droidpot
