#include <doctest.h>

#include <fstream>

#include "analysis/asn.hpp"
#include "analysis/stats.hpp"
#include "analysis/store.hpp"
#include "exporter/wire.hpp"
#include "sim/corpus.hpp"
#include "test_util.hpp"

using namespace droidpot;
using namespace droidpot::sim;
using droidpot::test::TempDir;

namespace {

CorpusSpec small_spec(uint64_t seed = 7) {
    CorpusSpec spec;
    spec.seed = seed;
    spec.duration_hours = 24;
    VantageSpec vs;
    vs.label = "umts";
    vs.rate_per_hour = 50;
    vs.tcp_share = 0.9;
    vs.port_mix = {{22, Transport::tcp, 5}, {1433, Transport::tcp, 3},
                   {80, Transport::tcp, 2}, {5060, Transport::udp, 1},
                   {53, Transport::udp, 1}};
    AsPopEntry as1{4134, "CHINANET", *Cidr::parse("58.0.0.0/12"), 3.0, 40};
    AsPopEntry as2{4812, "CHINANET-SH", *Cidr::parse("116.224.0.0/12"), 1.0, 10};
    AsPopEntry as3{9121, "TTNET", *Cidr::parse("78.160.0.0/11"), 0.5, 25};
    vs.as_population = {as1, as2, as3};
    spec.vantages.push_back(vs);
    return spec;
}

std::string asn_snapshot_for(const CorpusSpec& spec) {
    std::string text;
    for (const auto& vs : spec.vantages)
        for (const auto& as : vs.as_population)
            text += as.prefix.to_string() + " " + std::to_string(as.asn) + " " +
                    (as.name.empty() ? "AS" + std::to_string(as.asn) : as.name) + "\n";
    return text;
}

} // namespace

TEST_CASE("corpus generation is deterministic per seed") {
    std::string error;
    auto a = generate_corpus(small_spec(7), &error);
    auto b = generate_corpus(small_spec(7), &error);
    auto c = generate_corpus(small_spec(8), &error);
    REQUIRE(a);
    REQUIRE(b);
    REQUIRE(c);
    CHECK(a->vantages[0].lines == b->vantages[0].lines); // byte-identical
    CHECK(a->vantages[0].lines != c->vantages[0].lines);

    // ids are 1..N in line order, timestamps non-decreasing
    uint64_t expected_id = 1;
    TimestampMs last_ts = 0;
    for (const auto& line : a->vantages[0].lines) {
        auto e = droidpot::wire::parse_event(line);
        REQUIRE(e);
        CHECK(e->event_id == expected_id++);
        CHECK(e->timestamp >= last_ts);
        last_ts = e->timestamp;
    }
}

TEST_CASE("analysis reproduces generator ground truth exactly") {
    using namespace droidpot::analysis;
    std::string error;
    auto corpus = generate_corpus(small_spec(21), &error);
    REQUIRE(corpus);
    const auto& v = corpus->vantages[0];
    const GroundTruth& truth = v.truth;

    EventStore store = ingest_lines(v.lines);
    AsnDb db = AsnDb::parse(asn_snapshot_for(small_spec(21)));

    auto summary = transport_summary(store, "umts");
    CHECK(summary.tcp.attacks == truth.tcp_attacks);
    CHECK(summary.udp.attacks == truth.udp_attacks);
    CHECK(summary.tcp.distinct_ports == truth.tcp_ports.size());
    CHECK(summary.udp.distinct_ports == truth.udp_ports.size());

    auto ports = all_ports_ranked(store, "umts");
    uint64_t seen_total = 0;
    for (const auto& e : ports.entries) {
        uint16_t port = static_cast<uint16_t>(e.key);
        uint64_t expected = 0;
        auto tcp_it = truth.tcp_ports.find(port);
        if (tcp_it != truth.tcp_ports.end()) expected += tcp_it->second;
        auto udp_it = truth.udp_ports.find(port);
        if (udp_it != truth.udp_ports.end()) expected += udp_it->second;
        CHECK(e.count == expected);
        seen_total += e.count;
    }
    CHECK(seen_total == truth.events);

    auto attacks = attacks_per_as(store, "umts", db);
    CHECK(attacks.unknown == 0);
    REQUIRE(attacks.ranked.entries.size() == truth.as_attacks.size());
    for (const auto& e : attacks.ranked.entries)
        CHECK(e.count == truth.as_attacks.at(static_cast<uint32_t>(e.key)));

    auto attackers = attackers_per_as(store, "umts", db);
    for (const auto& e : attackers.ranked.entries)
        CHECK(e.count == truth.as_attackers.at(static_cast<uint32_t>(e.key)));

    auto hourly = hourly_rate(store, "umts");
    CHECK(hourly.counts.size() == truth.hours);
    CHECK(hourly.mean == doctest::Approx(truth.hourly_mean));
}

TEST_CASE("tcp share lands within the binomial tolerance at n=10^4") {
    CorpusSpec spec = small_spec(99);
    spec.duration_hours = 100;
    spec.vantages[0].rate_per_hour = 100; // ~10^4 events
    std::string error;
    auto corpus = generate_corpus(spec, &error);
    REQUIRE(corpus);
    const auto& truth = corpus->vantages[0].truth;
    CHECK(truth.events > 9000);
    CHECK(truth.tcp_share == doctest::Approx(0.9).epsilon(0.0223)); // +-2% absolute
}

TEST_CASE("exact mode reproduces requested totals") {
    CorpusSpec spec;
    spec.seed = 5;
    spec.duration_hours = 4;
    VantageSpec vs;
    vs.label = "umts";
    vs.tcp_port_counts = {{22, 100}, {1433, 50}};
    vs.udp_port_counts = {{5060, 7}};
    AsPopEntry as{64500, "TEST", *Cidr::parse("203.0.0.0/16"), 1.0, 30};
    vs.as_population = {as};
    spec.vantages.push_back(vs);

    std::string error;
    auto corpus = generate_corpus(spec, &error);
    REQUIRE(corpus);
    const auto& truth = corpus->vantages[0].truth;
    CHECK(truth.tcp_attacks == 150);
    CHECK(truth.udp_attacks == 7);
    CHECK(truth.tcp_ports.size() == 2);
    CHECK(truth.udp_ports.size() == 1);
    CHECK(corpus->vantages[0].lines.size() == 157);

    using namespace droidpot::analysis;
    EventStore store = ingest_lines(corpus->vantages[0].lines);
    auto summary = transport_summary(store, "umts");
    CHECK(summary.tcp.attacks == 150);
    CHECK(summary.tcp.distinct_ports == 2);
    CHECK(summary.udp.attacks == 7);
    CHECK(summary.udp.distinct_ports == 1);
}

TEST_CASE("spec parsing and validation errors") {
    std::string error;
    CHECK_FALSE(CorpusSpec::from_json("[]", &error));
    CHECK_FALSE(CorpusSpec::from_json("{}", &error));

    // zero duration
    CHECK_FALSE(CorpusSpec::from_json(R"({"duration_hours": 0, "vantages": [
      {"label": "umts", "rate_per_hour": 5,
       "port_mix": [{"port": 22, "proto": "tcp"}],
       "as_population": [{"asn": 1, "prefix": "10.0.0.0/8"}]}]})",
                                      &error));
    CHECK(error.find("duration_hours") != std::string::npos);

    // missing udp ports with udp share
    CHECK_FALSE(CorpusSpec::from_json(R"({"duration_hours": 1, "vantages": [
      {"label": "umts", "rate_per_hour": 5, "tcp_share": 0.5,
       "port_mix": [{"port": 22, "proto": "tcp"}],
       "as_population": [{"asn": 1, "prefix": "10.0.0.0/8"}]}]})",
                                      &error));

    // attackers exceed prefix capacity
    CHECK_FALSE(CorpusSpec::from_json(R"({"duration_hours": 1, "vantages": [
      {"label": "umts", "rate_per_hour": 5,
       "port_mix": [{"port": 22, "proto": "tcp"}, {"port": 53, "proto": "udp"}],
       "as_population": [{"asn": 1, "prefix": "10.0.0.0/30", "attackers": 1000}]}]})",
                                      &error));

    // asn 0 reserved
    CHECK_FALSE(CorpusSpec::from_json(R"({"duration_hours": 1, "vantages": [
      {"label": "umts", "rate_per_hour": 5,
       "port_mix": [{"port": 22, "proto": "tcp"}, {"port": 53, "proto": "udp"}],
       "as_population": [{"asn": 0, "prefix": "10.0.0.0/8"}]}]})",
                                      &error));

    // valid round trip through a file
    TempDir dir("spec");
    std::string good = R"({"seed": 3, "duration_hours": 2, "vantages": [
      {"label": "dsl", "rate_per_hour": 10, "tcp_share": 1.0,
       "port_mix": [{"port": 22, "proto": "tcp", "weight": 1}],
       "as_population": [{"asn": 5, "prefix": "10.0.0.0/8", "attackers": 4}]}]})";
    {
        std::ofstream out(dir.file("spec.json"));
        out << good;
    }
    auto spec = CorpusSpec::from_file(dir.file("spec.json"), &error);
    REQUIRE_MESSAGE(spec, error);
    CHECK(spec->vantages[0].label == "dsl");
}

TEST_CASE("write_corpus emits per-vantage logs and ground truth") {
    TempDir dir("corpusout");
    std::string error;
    auto corpus = generate_corpus(small_spec(3), &error);
    REQUIRE(corpus);
    REQUIRE(write_corpus(*corpus, dir.str(), &error));

    std::ifstream log(dir.file("umts.ndjson"));
    REQUIRE(log.good());
    size_t lines = 0;
    std::string line;
    while (std::getline(log, line)) lines++;
    CHECK(lines == corpus->vantages[0].lines.size());

    std::ifstream truth(dir.file("ground_truth.json"));
    REQUIRE(truth.good());
    std::string text((std::istreambuf_iterator<char>(truth)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"umts\"") != std::string::npos);
    CHECK(text.find("as_attacks") != std::string::npos);
}
