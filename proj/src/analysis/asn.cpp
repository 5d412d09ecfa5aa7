#include "analysis/asn.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace droidpot::analysis {

namespace {

uint32_t v4_key(const IpAddr& ip, int len) {
    uint32_t v = (uint32_t(ip.bytes[0]) << 24) | (uint32_t(ip.bytes[1]) << 16) |
                 (uint32_t(ip.bytes[2]) << 8) | uint32_t(ip.bytes[3]);
    if (len == 0) return 0;
    return v & (len >= 32 ? 0xFFFFFFFFu : ~((1u << (32 - len)) - 1));
}

std::string v6_key(const IpAddr& ip, int len) {
    std::string key(16, '\0');
    int remaining = len;
    for (size_t i = 0; i < 16 && remaining > 0; i++) {
        int take = remaining >= 8 ? 8 : remaining;
        uint8_t mask = static_cast<uint8_t>(0xFF << (8 - take));
        key[i] = static_cast<char>(ip.bytes[i] & mask);
        remaining -= take;
    }
    return key;
}

} // namespace

std::optional<AsnDb> AsnDb::load_file(const std::string& path, std::string* error) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (error) *error = path + ": cannot open asn database";
        return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    size_t skipped = 0;
    AsnDb db = parse(buf.str(), &skipped);
    if (db.size() == 0) {
        if (error) *error = path + ": no valid prefix entries";
        return std::nullopt;
    }
    return db;
}

AsnDb AsnDb::parse(const std::string& text, size_t* skipped_lines) {
    AsnDb db;
    size_t skipped = 0;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream fields(line);
        std::string prefix_text, asn_text;
        if (!(fields >> prefix_text >> asn_text)) {
            skipped++;
            continue;
        }
        std::string name;
        std::getline(fields, name);
        size_t name_start = name.find_first_not_of(" \t");
        name = name_start == std::string::npos ? "" : name.substr(name_start);

        auto prefix = Cidr::parse(prefix_text);
        char* end = nullptr;
        unsigned long asn = std::strtoul(asn_text.c_str(), &end, 10);
        if (!prefix || end == asn_text.c_str() || *end != '\0' || asn > 0xFFFFFFFFul ||
            asn == 0) {
            skipped++;
            continue;
        }
        db.insert(*prefix, static_cast<uint32_t>(asn), name);
    }
    if (skipped_lines) *skipped_lines = skipped;
    return db;
}

void AsnDb::insert(const Cidr& prefix, uint32_t asn, const std::string& name) {
    if (prefix.addr.family == IpAddr::Family::v4) {
        v4_[prefix.prefix_len][v4_key(prefix.addr, prefix.prefix_len)] = asn;
        if (prefix.prefix_len > v4_max_len_) v4_max_len_ = prefix.prefix_len;
    } else {
        v6_[prefix.prefix_len][v6_key(prefix.addr, prefix.prefix_len)] = asn;
        if (prefix.prefix_len > v6_max_len_) v6_max_len_ = prefix.prefix_len;
    }
    if (!names_.count(asn)) names_[asn] = name;
    entry_count_++;
}

AsnDb::Lookup AsnDb::lookup(const IpAddr& ip) const {
    if (ip.family == IpAddr::Family::v4) {
        for (int len = v4_max_len_; len >= 0; len--) {
            const auto& table = v4_[len];
            if (table.empty()) continue;
            auto it = table.find(v4_key(ip, len));
            if (it != table.end()) {
                auto name = names_.find(it->second);
                return {it->second, name == names_.end() ? "" : name->second.c_str()};
            }
        }
    } else {
        for (int len = v6_max_len_; len >= 0; len--) {
            const auto& table = v6_[len];
            if (table.empty()) continue;
            auto it = table.find(v6_key(ip, len));
            if (it != table.end()) {
                auto name = names_.find(it->second);
                return {it->second, name == names_.end() ? "" : name->second.c_str()};
            }
        }
    }
    return {0, "UNKNOWN"};
}

const std::string* AsnDb::as_name(uint32_t asn) const {
    auto it = names_.find(asn);
    return it == names_.end() ? nullptr : &it->second;
}

} // namespace droidpot::analysis
