#include "sim/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "exporter/wire.hpp"

namespace droidpot::sim {

namespace fs = std::filesystem;

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

uint64_t uniform_below(std::mt19937_64& rng, uint64_t n) { return n == 0 ? 0 : rng() % n; }

// Knuth sampler; split keeps exp(-lambda) well above underflow.
uint64_t poisson(std::mt19937_64& rng, double lambda) {
    if (lambda <= 0) return 0;
    if (lambda > 300) {
        double half = lambda / 2;
        return poisson(rng, half) + poisson(rng, lambda - half);
    }
    double limit = std::exp(-lambda);
    double p = 1.0;
    uint64_t k = 0;
    do {
        k++;
        p *= uniform01(rng);
    } while (p > limit);
    return k - 1;
}

size_t weighted_choice(std::mt19937_64& rng, const std::vector<double>& cumulative) {
    double x = uniform01(rng) * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    size_t idx = static_cast<size_t>(it - cumulative.begin());
    return std::min(idx, cumulative.size() - 1);
}

uint32_t prefix_base_u32(const Cidr& prefix) {
    uint32_t v = (uint32_t(prefix.addr.bytes[0]) << 24) | (uint32_t(prefix.addr.bytes[1]) << 16) |
                 (uint32_t(prefix.addr.bytes[2]) << 8) | uint32_t(prefix.addr.bytes[3]);
    if (prefix.prefix_len == 0) return 0;
    return v & (prefix.prefix_len >= 32 ? 0xFFFFFFFFu
                                        : ~((1u << (32 - prefix.prefix_len)) - 1));
}

Service service_for_port(uint16_t port) {
    switch (port) {
    case 22:
    case 2222: return Service::shell;
    case 80:
    case 8080: return Service::web;
    case 21:
    case 2121: return Service::ftp;
    case 69:
    case 6969: return Service::tftp;
    default: return Service::port_trap;
    }
}

struct PendingEvent {
    TimestampMs ts;
    uint64_t seq;
    Transport transport;
    IpAddr src_ip;
    uint16_t src_port;
    uint16_t dst_port;
};

} // namespace

std::optional<CorpusSpec> CorpusSpec::from_file(const std::string& path, std::string* error) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (error) *error = path + ": cannot open corpus spec";
        return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str(), error);
}

std::optional<CorpusSpec> CorpusSpec::from_json(const std::string& text, std::string* error) {
    auto fail = [&](const std::string& msg) -> std::optional<CorpusSpec> {
        if (error) *error = msg;
        return std::nullopt;
    };
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return fail("corpus spec is not a JSON object");

    CorpusSpec spec;
    try {
        if (j.contains("seed")) spec.seed = j["seed"].get<uint64_t>();
        if (j.contains("start")) {
            auto ts = parse_rfc3339_ms(j["start"].get<std::string>());
            if (!ts) return fail("bad start timestamp");
            spec.start = *ts;
        }
        if (j.contains("duration_hours")) spec.duration_hours = j["duration_hours"].get<double>();
        if (!j.contains("vantages") || !j["vantages"].is_array() || j["vantages"].empty())
            return fail("spec needs a non-empty vantages array");

        for (const auto& v : j["vantages"]) {
            VantageSpec vs;
            vs.label = v.at("label").get<std::string>();
            if (!Vantage::parse(vs.label)) return fail("bad vantage label: " + vs.label);
            if (v.contains("rate_per_hour")) vs.rate_per_hour = v["rate_per_hour"].get<double>();
            if (v.contains("tcp_share")) vs.tcp_share = v["tcp_share"].get<double>();
            if (vs.tcp_share < 0 || vs.tcp_share > 1)
                return fail(vs.label + ": tcp_share outside [0,1]");

            if (v.contains("port_mix")) {
                for (const auto& m : v["port_mix"]) {
                    PortMixEntry e;
                    e.port = m.at("port").get<uint16_t>();
                    auto proto = transport_from_string(m.value("proto", "tcp"));
                    if (!proto) return fail(vs.label + ": bad proto in port_mix");
                    e.proto = *proto;
                    e.weight = m.value("weight", 1.0);
                    if (e.weight <= 0) return fail(vs.label + ": port_mix weight must be > 0");
                    vs.port_mix.push_back(e);
                }
            }
            if (v.contains("port_counts")) {
                const auto& pc = v["port_counts"];
                auto load_counts = [&](const char* key,
                                       std::vector<std::pair<uint16_t, uint64_t>>* out) {
                    if (!pc.contains(key)) return true;
                    for (const auto& pair : pc[key]) {
                        if (!pair.is_array() || pair.size() != 2) return false;
                        out->emplace_back(pair[0].get<uint16_t>(), pair[1].get<uint64_t>());
                    }
                    return true;
                };
                if (!load_counts("tcp", &vs.tcp_port_counts) ||
                    !load_counts("udp", &vs.udp_port_counts))
                    return fail(vs.label + ": port_counts entries must be [port, count] pairs");
            }

            if (!v.contains("as_population") || !v["as_population"].is_array() ||
                v["as_population"].empty())
                return fail(vs.label + ": as_population must be a non-empty array");
            size_t idx = 0;
            for (const auto& a : v["as_population"]) {
                AsPopEntry e;
                e.asn = a.at("asn").get<uint32_t>();
                if (e.asn == 0) return fail(vs.label + ": asn 0 is reserved for UNKNOWN");
                e.name = a.value("name", "");
                auto prefix = Cidr::parse(a.at("prefix").get<std::string>());
                if (!prefix || prefix->addr.family != IpAddr::Family::v4)
                    return fail(vs.label + ": as_population prefixes must be IPv4 CIDR");
                e.prefix = *prefix;
                e.weight = a.value("weight", 0.0);
                if (e.weight <= 0) e.weight = std::pow(static_cast<double>(idx + 1), -1.2);
                e.attackers = a.value("attackers", 1u);
                uint64_t hosts = e.prefix.prefix_len >= 31
                                     ? 1
                                     : (1ull << (32 - e.prefix.prefix_len)) - 2;
                if (e.attackers == 0 || e.attackers > hosts)
                    return fail(vs.label + ": attackers must be in [1, prefix capacity)");
                vs.as_population.push_back(e);
                idx++;
            }
            spec.vantages.push_back(std::move(vs));
        }
    } catch (const nlohmann::json::exception& e) {
        return fail(std::string("corpus spec: ") + e.what());
    }

    for (const auto& vs : spec.vantages) {
        if (vs.exact_mode()) continue;
        if (spec.duration_hours <= 0) {
            if (error) *error = "duration_hours must be > 0";
            return std::nullopt;
        }
        if (vs.rate_per_hour <= 0) {
            if (error) *error = vs.label + ": rate_per_hour must be > 0";
            return std::nullopt;
        }
        if (vs.port_mix.empty()) {
            if (error) *error = vs.label + ": port_mix required in rate mode";
            return std::nullopt;
        }
        bool has_tcp = false, has_udp = false;
        for (const auto& m : vs.port_mix) {
            has_tcp |= m.proto == Transport::tcp;
            has_udp |= m.proto == Transport::udp;
        }
        if (vs.tcp_share > 0 && !has_tcp) {
            if (error) *error = vs.label + ": tcp_share > 0 but no tcp ports in mix";
            return std::nullopt;
        }
        if (vs.tcp_share < 1 && !has_udp) {
            if (error) *error = vs.label + ": tcp_share < 1 but no udp ports in mix";
            return std::nullopt;
        }
    }
    return spec;
}

std::optional<Corpus> generate_corpus(const CorpusSpec& spec, std::string* error) {
    Corpus corpus;
    const TimestampMs duration_ms =
        static_cast<TimestampMs>(spec.duration_hours * 3600'000.0);

    for (size_t vidx = 0; vidx < spec.vantages.size(); vidx++) {
        const VantageSpec& vs = spec.vantages[vidx];
        std::mt19937_64 rng(spec.seed * 1000003ull + vidx);

        std::vector<double> as_cumulative;
        double acc = 0;
        for (const auto& a : vs.as_population) {
            acc += a.weight;
            as_cumulative.push_back(acc);
        }

        GroundTruth truth;
        std::map<uint32_t, std::set<uint32_t>> attacker_sets; // asn -> drawn host offsets
        std::vector<PendingEvent> pending;

        auto draw_source = [&](PendingEvent* ev) {
            size_t as_idx = weighted_choice(rng, as_cumulative);
            const AsPopEntry& as_entry = vs.as_population[as_idx];
            uint32_t host =
                static_cast<uint32_t>(uniform_below(rng, as_entry.attackers)); // 0-based
            ev->src_ip = IpAddr::v4_from(prefix_base_u32(as_entry.prefix) + 1 + host);
            ev->src_port = static_cast<uint16_t>(1024 + uniform_below(rng, 64000));
            truth.as_attacks[as_entry.asn]++;
            attacker_sets[as_entry.asn].insert(host);
        };

        auto tally_port = [&](Transport proto, uint16_t port) {
            if (proto == Transport::tcp) {
                truth.tcp_attacks++;
                truth.tcp_ports[port]++;
            } else {
                truth.udp_attacks++;
                truth.udp_ports[port]++;
            }
        };

        if (vs.exact_mode()) {
            if (duration_ms <= 0) {
                if (error) *error = "duration_hours must be > 0";
                return std::nullopt;
            }
            uint64_t seq = 0;
            auto emit_exact = [&](Transport proto,
                                  const std::vector<std::pair<uint16_t, uint64_t>>& counts) {
                for (const auto& [port, count] : counts) {
                    for (uint64_t i = 0; i < count; i++) {
                        PendingEvent ev;
                        ev.ts = spec.start +
                                static_cast<TimestampMs>(uniform_below(
                                    rng, static_cast<uint64_t>(duration_ms)));
                        ev.seq = seq++;
                        ev.transport = proto;
                        ev.dst_port = port;
                        draw_source(&ev);
                        tally_port(proto, port);
                        pending.push_back(ev);
                    }
                }
            };
            emit_exact(Transport::tcp, vs.tcp_port_counts);
            emit_exact(Transport::udp, vs.udp_port_counts);
        } else {
            std::vector<double> tcp_cum, udp_cum;
            std::vector<const PortMixEntry*> tcp_entries, udp_entries;
            double tcp_acc = 0, udp_acc = 0;
            for (const auto& m : vs.port_mix) {
                if (m.proto == Transport::tcp) {
                    tcp_acc += m.weight;
                    tcp_cum.push_back(tcp_acc);
                    tcp_entries.push_back(&m);
                } else {
                    udp_acc += m.weight;
                    udp_cum.push_back(udp_acc);
                    udp_entries.push_back(&m);
                }
            }

            uint64_t seq = 0;
            uint64_t hours = static_cast<uint64_t>(std::ceil(spec.duration_hours));
            for (uint64_t h = 0; h < hours; h++) {
                double hour_fraction = std::min(1.0, spec.duration_hours - static_cast<double>(h));
                uint64_t arrivals = poisson(rng, vs.rate_per_hour * hour_fraction);
                for (uint64_t i = 0; i < arrivals; i++) {
                    PendingEvent ev;
                    ev.ts = spec.start + static_cast<TimestampMs>(h) * 3600'000 +
                            static_cast<TimestampMs>(uniform_below(
                                rng, static_cast<uint64_t>(3600'000.0 * hour_fraction)));
                    ev.seq = seq++;
                    bool tcp = uniform01(rng) < vs.tcp_share;
                    ev.transport = tcp ? Transport::tcp : Transport::udp;
                    const auto& entries = tcp ? tcp_entries : udp_entries;
                    const auto& cumulative = tcp ? tcp_cum : udp_cum;
                    const PortMixEntry* mix = entries[weighted_choice(rng, cumulative)];
                    ev.dst_port = mix->port;
                    draw_source(&ev);
                    tally_port(ev.transport, ev.dst_port);
                    pending.push_back(ev);
                }
            }
        }

        std::sort(pending.begin(), pending.end(), [](const PendingEvent& a, const PendingEvent& b) {
            if (a.ts != b.ts) return a.ts < b.ts;
            return a.seq < b.seq;
        });

        Corpus::PerVantage out;
        out.label = vs.label;
        Vantage vantage = *Vantage::parse(vs.label);
        uint64_t next_id = 1;
        std::mt19937_64 bytes_rng(spec.seed * 7919ull + vidx);
        for (const auto& p : pending) {
            AttackEvent e;
            e.event_id = next_id++;
            e.timestamp = p.ts;
            e.vantage = vantage;
            e.transport = p.transport;
            e.src_ip = p.src_ip;
            e.src_port = p.src_port;
            e.dst_port = p.dst_port;
            e.service = service_for_port(p.dst_port);
            e.payload_bytes = uniform_below(bytes_rng, 1460);
            e.excluded = false;
            out.lines.push_back(wire::serialize_event(e));
        }

        truth.events = truth.tcp_attacks + truth.udp_attacks;
        truth.tcp_share =
            truth.events == 0
                ? 0
                : static_cast<double>(truth.tcp_attacks) / static_cast<double>(truth.events);
        for (const auto& [asn, hosts] : attacker_sets) truth.as_attackers[asn] = hosts.size();
        if (!pending.empty()) {
            TimestampMs min_ts = pending.front().ts;
            TimestampMs max_ts = pending.back().ts;
            if (max_ts - min_ts < 3600'000) {
                truth.hours = 1;
            } else {
                TimestampMs first = min_ts - (min_ts % 3600'000);
                TimestampMs last = max_ts - (max_ts % 3600'000);
                truth.hours = static_cast<uint64_t>((last - first) / 3600'000) + 1;
            }
            truth.hourly_mean =
                static_cast<double>(truth.events) / static_cast<double>(truth.hours);
        }
        out.truth = truth;
        corpus.vantages.push_back(std::move(out));
    }
    return corpus;
}

std::string ground_truth_json(const Corpus& corpus) {
    nlohmann::ordered_json root;
    auto vantages = nlohmann::ordered_json::object();
    for (const auto& v : corpus.vantages) {
        const GroundTruth& t = v.truth;
        nlohmann::ordered_json j;
        j["events"] = t.events;
        j["transport"] = {
            {"tcp", {{"ports", t.tcp_ports.size()}, {"attacks", t.tcp_attacks}}},
            {"udp", {{"ports", t.udp_ports.size()}, {"attacks", t.udp_attacks}}}};
        j["tcp_share"] = t.tcp_share;
        auto port_map = [](const std::map<uint16_t, uint64_t>& m) {
            auto obj = nlohmann::ordered_json::object();
            for (const auto& [port, count] : m) obj[std::to_string(port)] = count;
            return obj;
        };
        j["ports"] = {{"tcp", port_map(t.tcp_ports)}, {"udp", port_map(t.udp_ports)}};
        auto as_map = [](const std::map<uint32_t, uint64_t>& m) {
            auto obj = nlohmann::ordered_json::object();
            for (const auto& [asn, count] : m) obj[std::to_string(asn)] = count;
            return obj;
        };
        j["as_attacks"] = as_map(t.as_attacks);
        j["as_attackers"] = as_map(t.as_attackers);
        j["hours"] = t.hours;
        j["hourly_mean"] = t.hourly_mean;
        vantages[v.label] = std::move(j);
    }
    root["vantages"] = std::move(vantages);
    return root.dump(2) + "\n";
}

bool write_corpus(const Corpus& corpus, const std::string& out_dir, std::string* error) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        if (error) *error = out_dir + ": " + ec.message();
        return false;
    }
    for (const auto& v : corpus.vantages) {
        std::ofstream out(fs::path(out_dir) / (v.label + ".ndjson"),
                          std::ios::trunc | std::ios::binary);
        if (!out) {
            if (error) *error = out_dir + "/" + v.label + ".ndjson: cannot write";
            return false;
        }
        for (const auto& line : v.lines) out << line << "\n";
    }
    std::ofstream truth(fs::path(out_dir) / "ground_truth.json",
                        std::ios::trunc | std::ios::binary);
    if (!truth) {
        if (error) *error = out_dir + "/ground_truth.json: cannot write";
        return false;
    }
    truth << ground_truth_json(corpus);
    return true;
}

} // namespace droidpot::sim
