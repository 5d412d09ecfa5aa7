#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <string_view>

namespace droidpot {

// Incremental SHA-256 (FIPS 180-4). Self-contained so artifact digests do
// not depend on a TLS library being present at deploy time.
class Sha256 {
  public:
    Sha256() { reset(); }

    void reset();
    void update(const void* data, size_t len);
    // Finalizes and returns the 64-char lowercase hex digest.
    std::string hex_digest();

    static std::string of(std::string_view data);

  private:
    void process_block(const uint8_t* block);

    uint32_t state_[8];
    uint64_t total_len_ = 0;
    uint8_t buffer_[64];
    size_t buffer_len_ = 0;
};

} // namespace droidpot
