#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace droidpot {

// IPv4 or IPv6 address. v4 occupies the first 4 bytes of `bytes`.
struct IpAddr {
    enum class Family : uint8_t { v4, v6 };

    Family family = Family::v4;
    std::array<uint8_t, 16> bytes{};

    static std::optional<IpAddr> parse(const std::string& text);
    static IpAddr v4_from(uint32_t host_order);

    // Canonical text form: dotted quad, or lowercase compressed IPv6
    // without brackets.
    std::string to_string() const;

    size_t addr_len() const { return family == Family::v4 ? 4 : 16; }

    bool operator==(const IpAddr& o) const {
        if (family != o.family) return false;
        return std::equal(bytes.begin(), bytes.begin() + addr_len(), o.bytes.begin());
    }
    bool operator!=(const IpAddr& o) const { return !(*this == o); }
    bool operator<(const IpAddr& o) const {
        if (family != o.family) return family < o.family;
        return std::lexicographical_compare(bytes.begin(), bytes.begin() + addr_len(),
                                            o.bytes.begin(), o.bytes.begin() + o.addr_len());
    }
};

struct IpAddrHash {
    size_t operator()(const IpAddr& a) const {
        size_t h = a.family == IpAddr::Family::v4 ? 0x9e3779b9u : 0x85ebca6bu;
        for (size_t i = 0; i < a.addr_len(); i++) h = h * 31 + a.bytes[i];
        return h;
    }
};

// CIDR prefix, e.g. "10.0.0.0/24" or a bare address (implied full length).
struct Cidr {
    IpAddr addr;
    int prefix_len = 0;

    static std::optional<Cidr> parse(const std::string& text);
    bool contains(const IpAddr& ip) const;
    std::string to_string() const;
};

} // namespace droidpot
