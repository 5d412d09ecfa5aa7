// Benchmark: serial reference vs OpenMP kernels over a synthetic corpus.
// Verifies the outputs are identical before reporting speedups.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "analysis/asn.hpp"
#include "analysis/stats.hpp"
#include "analysis/store.hpp"
#include "sim/corpus.hpp"

using namespace droidpot;
using namespace droidpot::analysis;

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

template <typename F> double timed(F&& fn) {
    auto start = std::chrono::steady_clock::now();
    fn();
    return ms_since(start);
}

} // namespace

int main(int argc, char** argv) {
    uint64_t events = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2'000'000;

    sim::CorpusSpec spec;
    spec.seed = 99;
    spec.duration_hours = 720;
    sim::VantageSpec vs;
    vs.label = "umts";
    vs.rate_per_hour = static_cast<double>(events) / 720.0;
    vs.tcp_share = 0.9;
    for (uint16_t port : {22, 23, 80, 1433, 3306, 3389, 5900, 6666})
        vs.port_mix.push_back({port, Transport::tcp, 1.0});
    vs.port_mix.push_back({5060, Transport::udp, 1.0});
    vs.port_mix.push_back({53, Transport::udp, 1.0});
    for (uint32_t i = 0; i < 64; i++) {
        sim::AsPopEntry as;
        as.asn = 1000 + i;
        as.prefix = *Cidr::parse(std::to_string(10 + i / 8) + "." + std::to_string((i * 8) % 256) +
                                 ".0.0/16");
        as.weight = 0; // Zipf default
        as.attackers = 500;
        vs.as_population.push_back(as);
    }
    spec.vantages.push_back(vs);

    std::string error;
    auto corpus = sim::generate_corpus(spec, &error);
    if (!corpus) {
        std::cerr << "corpus generation failed: " << error << "\n";
        return 1;
    }
    EventStore store = ingest_lines(corpus->vantages[0].lines);
    std::cout << "events: " << store.rows.size() << "\n";

    std::string asn_text;
    for (const auto& as : vs.as_population)
        asn_text += as.prefix.to_string() + " " + std::to_string(as.asn) + " AS" +
                    std::to_string(as.asn) + "\n";
    AsnDb db = AsnDb::parse(asn_text);

    struct Case {
        const char* name;
        double serial_ms;
        double parallel_ms;
        bool identical;
    };
    std::vector<Case> cases;

    {
        TransportSummary a, b;
        double ts = timed([&] { a = transport_summary(store, "umts", ExecMode::serial); });
        double tp = timed([&] { b = transport_summary(store, "umts", ExecMode::parallel); });
        cases.push_back({"transport_summary", ts, tp, a == b});
    }
    {
        RankedDistribution a, b;
        double ts = timed([&] { a = all_ports_ranked(store, "umts", ExecMode::serial); });
        double tp = timed([&] { b = all_ports_ranked(store, "umts", ExecMode::parallel); });
        cases.push_back({"ports_ranked", ts, tp, a == b});
    }
    {
        AsTally a, b;
        double ts = timed([&] { a = attacks_per_as(store, "umts", db, ExecMode::serial); });
        double tp = timed([&] { b = attacks_per_as(store, "umts", db, ExecMode::parallel); });
        cases.push_back({"attacks_per_as", ts, tp, a == b});
    }
    {
        AsTally a, b;
        double ts = timed([&] { a = attackers_per_as(store, "umts", db, ExecMode::serial); });
        double tp = timed([&] { b = attackers_per_as(store, "umts", db, ExecMode::parallel); });
        cases.push_back({"attackers_per_as", ts, tp, a == b});
    }
    {
        HourlySeries a, b;
        double ts = timed([&] { a = hourly_rate(store, "umts", ExecMode::serial); });
        double tp = timed([&] { b = hourly_rate(store, "umts", ExecMode::parallel); });
        cases.push_back({"hourly_rate", ts, tp, a == b});
    }

    bool all_identical = true;
    std::printf("%-20s %12s %12s %8s %s\n", "kernel", "serial(ms)", "openmp(ms)", "speedup",
                "identical");
    for (const auto& c : cases) {
        all_identical = all_identical && c.identical;
        std::printf("%-20s %12.2f %12.2f %7.2fx %s\n", c.name, c.serial_ms, c.parallel_ms,
                    c.parallel_ms > 0 ? c.serial_ms / c.parallel_ms : 0.0,
                    c.identical ? "yes" : "NO");
    }
    if (!all_identical) {
        std::cerr << "parallel kernels diverged from the serial reference\n";
        return 1;
    }
    return 0;
}
