#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/clock.hpp"
#include "core/ip.hpp"

namespace droidpot {

enum class Transport : uint8_t { tcp, udp };

inline const char* to_string(Transport t) { return t == Transport::tcp ? "tcp" : "udp"; }
std::optional<Transport> transport_from_string(const std::string& s);

enum class Service : uint8_t { shell, web, ftp, tftp, port_trap };

const char* to_string(Service s);
std::optional<Service> service_from_string(const std::string& s);

// Network access a probe is connected through. Labels corpora so runs from
// different uplinks can be compared.
struct Vantage {
    enum class Kind : uint8_t { umts, darknet, dsl, university, custom };

    Kind kind = Kind::custom;
    std::string custom_name; // set only for Kind::custom

    std::string label() const;
    // Accepts the four well-known labels or a custom one (non-empty,
    // lowercase, <= 32 chars).
    static std::optional<Vantage> parse(const std::string& label);

    bool operator==(const Vantage& o) const {
        return kind == o.kind && (kind != Kind::custom || custom_name == o.custom_name);
    }
};

// One external connection (TCP) or new flow (UDP). Immutable once recorded.
struct AttackEvent {
    uint64_t event_id = 0;
    TimestampMs timestamp = 0;
    Vantage vantage;
    Transport transport = Transport::tcp;
    IpAddr src_ip;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    Service service = Service::port_trap;
    std::optional<uint64_t> session_id;
    uint64_t payload_bytes = 0;
    bool excluded = false;
};

// Source-IP identity of an adversary; distinctness is exact address equality.
struct Attacker {
    IpAddr src_ip;
    bool operator==(const Attacker& o) const { return src_ip == o.src_ip; }
};

struct ArtifactOrigin {
    enum class Kind : uint8_t { shell_download, web_upload, ftp_store, tftp_write, raw_payload };

    Kind kind = Kind::raw_payload;
    std::string url;        // shell_download
    std::string form_field; // web_upload
    std::string filename;   // web_upload / tftp_write
    std::string path;       // ftp_store

    static const char* kind_name(Kind k);
};

// Content-addressed blob captured from an attacker.
struct CapturedArtifact {
    std::string digest; // sha-256 hex of the stored bytes
    uint64_t size_bytes = 0;
    ArtifactOrigin origin;
    TimestampMs first_seen = 0;
    std::optional<uint64_t> session_id;
};

struct LoginAttempt {
    std::string username;
    std::string password;
    enum class Outcome : uint8_t { granted, rejected, granted_by_attempt_quota } outcome;

    static const char* outcome_name(Outcome o);
};

struct TranscriptCommand {
    std::string input;
    std::string output;
    int exit_status = 0;
};

// Ordered record of one terminal/web/FTP session.
struct SessionTranscript {
    uint64_t session_id = 0;
    TimestampMs start = 0;
    TimestampMs end = 0;
    std::string src_endpoint; // "ip:port"
    Service service = Service::shell;
    std::vector<LoginAttempt> login_attempts;
    std::vector<TranscriptCommand> commands;
    std::vector<std::string> artifact_digests;
};

// Connection metadata handed to the event sink by a trap service.
struct ConnMeta {
    Transport transport = Transport::tcp;
    IpAddr src_ip;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    Service service = Service::port_trap;
    uint64_t payload_bytes = 0; // bytes known at event creation (first datagram for UDP)
};

} // namespace droidpot
