#include "core/artifacts.hpp"

#include <sys/stat.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "core/sha256.hpp"

namespace droidpot {

namespace fs = std::filesystem;

bool ArtifactStore::open(const std::string& dir, std::string* error) {
    std::lock_guard<std::mutex> lock(mu_);
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "blobs", ec);
    if (ec) {
        if (error) *error = dir + ": " + ec.message();
        return false;
    }
    dir_ = dir;
    // Rebuild the digest set so restarts keep deduplicating.
    for (const auto& entry : fs::directory_iterator(fs::path(dir) / "blobs", ec)) {
        if (!entry.is_regular_file()) continue;
        known_[entry.path().filename().string()] =
            static_cast<uint64_t>(entry.file_size(ec));
    }
    return true;
}

std::string ArtifactStore::blob_path(const std::string& digest) const {
    return (fs::path(dir_) / "blobs" / digest).string();
}

CapturedArtifact ArtifactStore::store(std::string_view bytes, const ArtifactOrigin& origin,
                                      std::optional<uint64_t> session_id, TimestampMs now) {
    CapturedArtifact a;
    a.digest = Sha256::of(bytes);
    a.size_bytes = bytes.size();
    a.origin = origin;
    a.first_seen = now;
    a.session_id = session_id;

    std::lock_guard<std::mutex> lock(mu_);
    if (known_.find(a.digest) == known_.end()) {
        if (dir_.empty()) {
            memory_blobs_[a.digest] = std::string(bytes);
        } else {
            std::string tmp = blob_path(a.digest) + ".tmp";
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            out.close();
            std::rename(tmp.c_str(), blob_path(a.digest).c_str());
        }
        known_[a.digest] = a.size_bytes;
    }
    references_++;
    if (!dir_.empty()) append_index(a);
    return a;
}

void ArtifactStore::append_index(const CapturedArtifact& a) {
    nlohmann::ordered_json origin;
    origin["type"] = ArtifactOrigin::kind_name(a.origin.kind);
    switch (a.origin.kind) {
    case ArtifactOrigin::Kind::shell_download: origin["url"] = a.origin.url; break;
    case ArtifactOrigin::Kind::web_upload:
        origin["form_field"] = a.origin.form_field;
        origin["filename"] = a.origin.filename;
        break;
    case ArtifactOrigin::Kind::ftp_store: origin["path"] = a.origin.path; break;
    case ArtifactOrigin::Kind::tftp_write: origin["filename"] = a.origin.filename; break;
    case ArtifactOrigin::Kind::raw_payload: break;
    }
    nlohmann::ordered_json j;
    j["digest"] = a.digest;
    j["size"] = a.size_bytes;
    j["origin"] = origin;
    j["first_seen"] = format_rfc3339_ms(a.first_seen);
    if (a.session_id)
        j["session"] = *a.session_id;
    else
        j["session"] = nullptr;

    std::ofstream out(fs::path(dir_) / "index.ndjson", std::ios::app | std::ios::binary);
    out << j.dump() << "\n";
}

std::optional<std::string> ArtifactStore::load(const std::string& digest) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (known_.find(digest) == known_.end()) return std::nullopt;
    if (dir_.empty()) {
        auto it = memory_blobs_.find(digest);
        if (it == memory_blobs_.end()) return std::nullopt;
        return it->second;
    }
    std::ifstream in(blob_path(digest), std::ios::binary);
    if (!in) return std::nullopt;
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool ArtifactStore::contains(const std::string& digest) const {
    std::lock_guard<std::mutex> lock(mu_);
    return known_.find(digest) != known_.end();
}

size_t ArtifactStore::blob_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return known_.size();
}

size_t ArtifactStore::reference_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return references_;
}

} // namespace droidpot
