#include "exporter/wire.hpp"

#include <json.hpp>

namespace droidpot::wire {

std::string serialize_event(const AttackEvent& e) {
    std::string out;
    out.reserve(192);
    out += "{\"id\":";
    out += std::to_string(e.event_id);
    out += ",\"ts\":\"";
    out += format_rfc3339_ms(e.timestamp);
    out += "\",\"vantage\":";
    out += nlohmann::json(e.vantage.label()).dump();
    out += ",\"proto\":\"";
    out += to_string(e.transport);
    out += "\",\"src_ip\":\"";
    out += e.src_ip.to_string();
    out += "\",\"src_port\":";
    out += std::to_string(e.src_port);
    out += ",\"dst_port\":";
    out += std::to_string(e.dst_port);
    out += ",\"service\":\"";
    out += to_string(e.service);
    out += "\",\"session\":";
    out += e.session_id ? std::to_string(*e.session_id) : "null";
    out += ",\"bytes\":";
    out += std::to_string(e.payload_bytes);
    out += ",\"excluded\":";
    out += e.excluded ? "true" : "false";
    out += "}";
    return out;
}

std::optional<AttackEvent> parse_event(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;

    AttackEvent e;
    if (!j.contains("id") || !j["id"].is_number_unsigned()) return std::nullopt;
    e.event_id = j["id"].get<uint64_t>();

    if (!j.contains("ts") || !j["ts"].is_string()) return std::nullopt;
    auto ts = parse_rfc3339_ms(j["ts"].get<std::string>());
    if (!ts) return std::nullopt;
    e.timestamp = *ts;

    if (!j.contains("vantage") || !j["vantage"].is_string()) return std::nullopt;
    auto vantage = Vantage::parse(j["vantage"].get<std::string>());
    if (!vantage) return std::nullopt;
    e.vantage = *vantage;

    if (!j.contains("proto") || !j["proto"].is_string()) return std::nullopt;
    auto proto = transport_from_string(j["proto"].get<std::string>());
    if (!proto) return std::nullopt;
    e.transport = *proto;

    if (!j.contains("src_ip") || !j["src_ip"].is_string()) return std::nullopt;
    auto ip = IpAddr::parse(j["src_ip"].get<std::string>());
    if (!ip) return std::nullopt;
    e.src_ip = *ip;

    if (!j.contains("src_port") || !j["src_port"].is_number_integer()) return std::nullopt;
    if (!j.contains("dst_port") || !j["dst_port"].is_number_integer()) return std::nullopt;
    int64_t sp = j["src_port"].get<int64_t>();
    int64_t dp = j["dst_port"].get<int64_t>();
    if (sp < 0 || sp > 65535 || dp < 0 || dp > 65535) return std::nullopt;
    e.src_port = static_cast<uint16_t>(sp);
    e.dst_port = static_cast<uint16_t>(dp);

    if (!j.contains("service") || !j["service"].is_string()) return std::nullopt;
    auto service = service_from_string(j["service"].get<std::string>());
    if (!service) return std::nullopt;
    e.service = *service;

    if (j.contains("session") && !j["session"].is_null()) {
        if (!j["session"].is_number_unsigned()) return std::nullopt;
        e.session_id = j["session"].get<uint64_t>();
    }

    if (!j.contains("bytes") || !j["bytes"].is_number_unsigned()) return std::nullopt;
    e.payload_bytes = j["bytes"].get<uint64_t>();

    if (!j.contains("excluded") || !j["excluded"].is_boolean()) return std::nullopt;
    e.excluded = j["excluded"].get<bool>();
    return e;
}

} // namespace droidpot::wire
