#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "core/clock.hpp"
#include "core/ip.hpp"
#include "core/model.hpp"

namespace droidpot::sim {

struct AsPopEntry {
    uint32_t asn = 0;
    std::string name;
    Cidr prefix; // v4
    double weight = 0; // <= 0: filled from the Zipf default by position
    uint32_t attackers = 1;
};

struct PortMixEntry {
    uint16_t port = 0;
    Transport proto = Transport::tcp;
    double weight = 1.0;
};

struct VantageSpec {
    std::string label;
    double rate_per_hour = 0; // Poisson arrivals per hour (rate mode)
    double tcp_share = 0.9;
    std::vector<PortMixEntry> port_mix;
    // Exact mode: explicit per-port event counts; overrides rate/port_mix.
    std::vector<std::pair<uint16_t, uint64_t>> tcp_port_counts;
    std::vector<std::pair<uint16_t, uint64_t>> udp_port_counts;
    std::vector<AsPopEntry> as_population;
    bool exact_mode() const { return !tcp_port_counts.empty() || !udp_port_counts.empty(); }
};

struct CorpusSpec {
    uint64_t seed = 1;
    TimestampMs start = 1351728000000; // 2012-11-01T00:00:00Z
    double duration_hours = 1.0;
    std::vector<VantageSpec> vantages;

    static std::optional<CorpusSpec> from_json(const std::string& text, std::string* error);
    static std::optional<CorpusSpec> from_file(const std::string& path, std::string* error);
};

// Tallies the generator counted while emitting events; analysis results
// must match these exactly.
struct GroundTruth {
    uint64_t events = 0;
    uint64_t tcp_attacks = 0;
    uint64_t udp_attacks = 0;
    std::map<uint16_t, uint64_t> tcp_ports;
    std::map<uint16_t, uint64_t> udp_ports;
    std::map<uint32_t, uint64_t> as_attacks;
    std::map<uint32_t, uint64_t> as_attackers;
    double tcp_share = 0;
    uint64_t hours = 0;  // analysis-style hour buckets over the realized range
    double hourly_mean = 0;
};

struct Corpus {
    struct PerVantage {
        std::string label;
        std::vector<std::string> lines; // serialized events, id order
        GroundTruth truth;
    };
    std::vector<PerVantage> vantages;
};

std::optional<Corpus> generate_corpus(const CorpusSpec& spec, std::string* error);

// Writes <label>.ndjson per vantage plus ground_truth.json.
bool write_corpus(const Corpus& corpus, const std::string& out_dir, std::string* error);

std::string ground_truth_json(const Corpus& corpus);

} // namespace droidpot::sim
