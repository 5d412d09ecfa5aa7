#include "core/ip.hpp"

#include <arpa/inet.h>

#include <cstdio>
#include <cstring>

namespace droidpot {

std::optional<IpAddr> IpAddr::parse(const std::string& text) {
    IpAddr out;
    in_addr a4{};
    if (inet_pton(AF_INET, text.c_str(), &a4) == 1) {
        out.family = Family::v4;
        std::memcpy(out.bytes.data(), &a4, 4);
        return out;
    }
    in6_addr a6{};
    if (inet_pton(AF_INET6, text.c_str(), &a6) == 1) {
        out.family = Family::v6;
        std::memcpy(out.bytes.data(), &a6, 16);
        return out;
    }
    return std::nullopt;
}

IpAddr IpAddr::v4_from(uint32_t host_order) {
    IpAddr out;
    out.family = Family::v4;
    out.bytes[0] = static_cast<uint8_t>(host_order >> 24);
    out.bytes[1] = static_cast<uint8_t>(host_order >> 16);
    out.bytes[2] = static_cast<uint8_t>(host_order >> 8);
    out.bytes[3] = static_cast<uint8_t>(host_order);
    return out;
}

std::string IpAddr::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {0};
    if (family == Family::v4) {
        in_addr a4{};
        std::memcpy(&a4, bytes.data(), 4);
        inet_ntop(AF_INET, &a4, buf, sizeof buf);
    } else {
        in6_addr a6{};
        std::memcpy(&a6, bytes.data(), 16);
        inet_ntop(AF_INET6, &a6, buf, sizeof buf);
    }
    return buf;
}

std::optional<Cidr> Cidr::parse(const std::string& text) {
    std::string addr_part = text;
    int len = -1;
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        addr_part = text.substr(0, slash);
        std::string len_part = text.substr(slash + 1);
        if (len_part.empty() || len_part.size() > 3) return std::nullopt;
        for (char c : len_part)
            if (c < '0' || c > '9') return std::nullopt;
        len = std::atoi(len_part.c_str());
    }
    auto addr = IpAddr::parse(addr_part);
    if (!addr) return std::nullopt;
    int max_len = addr->family == IpAddr::Family::v4 ? 32 : 128;
    if (len == -1) len = max_len;
    if (len < 0 || len > max_len) return std::nullopt;
    return Cidr{*addr, len};
}

bool Cidr::contains(const IpAddr& ip) const {
    if (ip.family != addr.family) return false;
    int remaining = prefix_len;
    for (size_t i = 0; i < ip.addr_len() && remaining > 0; i++) {
        int take = remaining >= 8 ? 8 : remaining;
        uint8_t mask = static_cast<uint8_t>(0xFF << (8 - take));
        if ((ip.bytes[i] & mask) != (addr.bytes[i] & mask)) return false;
        remaining -= take;
    }
    return true;
}

std::string Cidr::to_string() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "/%d", prefix_len);
    return addr.to_string() + buf;
}

} // namespace droidpot
