#include "core/model.hpp"

namespace droidpot {

std::optional<Transport> transport_from_string(const std::string& s) {
    if (s == "tcp") return Transport::tcp;
    if (s == "udp") return Transport::udp;
    return std::nullopt;
}

const char* to_string(Service s) {
    switch (s) {
    case Service::shell: return "shell";
    case Service::web: return "web";
    case Service::ftp: return "ftp";
    case Service::tftp: return "tftp";
    case Service::port_trap: return "port_trap";
    }
    return "port_trap";
}

std::optional<Service> service_from_string(const std::string& s) {
    if (s == "shell") return Service::shell;
    if (s == "web") return Service::web;
    if (s == "ftp") return Service::ftp;
    if (s == "tftp") return Service::tftp;
    if (s == "port_trap") return Service::port_trap;
    return std::nullopt;
}

std::string Vantage::label() const {
    switch (kind) {
    case Kind::umts: return "umts";
    case Kind::darknet: return "darknet";
    case Kind::dsl: return "dsl";
    case Kind::university: return "university";
    case Kind::custom: return custom_name;
    }
    return custom_name;
}

std::optional<Vantage> Vantage::parse(const std::string& label) {
    if (label == "umts") return Vantage{Kind::umts, {}};
    if (label == "darknet") return Vantage{Kind::darknet, {}};
    if (label == "dsl") return Vantage{Kind::dsl, {}};
    if (label == "university") return Vantage{Kind::university, {}};
    if (label.empty() || label.size() > 32) return std::nullopt;
    for (char c : label) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
        if (!ok) return std::nullopt;
    }
    return Vantage{Kind::custom, label};
}

const char* ArtifactOrigin::kind_name(Kind k) {
    switch (k) {
    case Kind::shell_download: return "shell_download";
    case Kind::web_upload: return "web_upload";
    case Kind::ftp_store: return "ftp_store";
    case Kind::tftp_write: return "tftp_write";
    case Kind::raw_payload: return "raw_payload";
    }
    return "raw_payload";
}

const char* LoginAttempt::outcome_name(Outcome o) {
    switch (o) {
    case Outcome::granted: return "granted";
    case Outcome::rejected: return "rejected";
    case Outcome::granted_by_attempt_quota: return "granted_by_attempt_quota";
    }
    return "rejected";
}

} // namespace droidpot
