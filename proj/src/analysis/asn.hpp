#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/ip.hpp"

namespace droidpot::analysis {

// Offline IP-to-ASN attribution via longest prefix match over a snapshot
// file, one mapping per line: "<prefix> <asn> <as name...>". Unmatched
// addresses map to ASN 0 ("UNKNOWN").
class AsnDb {
  public:
    struct Entry {
        uint32_t asn = 0;
        std::string name;
    };
    struct Lookup {
        uint32_t asn = 0;
        const char* name = "UNKNOWN";
    };

    static std::optional<AsnDb> load_file(const std::string& path, std::string* error);
    static AsnDb parse(const std::string& text, size_t* skipped_lines = nullptr);

    Lookup lookup(const IpAddr& ip) const;
    const std::string* as_name(uint32_t asn) const;
    size_t size() const { return entry_count_; }

  private:
    void insert(const Cidr& prefix, uint32_t asn, const std::string& name);

    // v4: per prefix length, masked address -> asn
    std::array<std::unordered_map<uint32_t, uint32_t>, 33> v4_;
    // v6: per prefix length, masked 16-byte key -> asn
    std::array<std::unordered_map<std::string, uint32_t>, 129> v6_;
    std::unordered_map<uint32_t, std::string> names_;
    size_t entry_count_ = 0;
    int v4_max_len_ = -1;
    int v6_max_len_ = -1;
};

} // namespace droidpot::analysis
