#include <doctest.h>

#include <random>

#include "corebist/faultsim.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace corebist;

namespace {

FaultUniverse saf(const Netlist& n) { return enumerate_faults(n, {true, false}); }
FaultUniverse tdf(const Netlist& n) { return enumerate_faults(n, {false, true}); }

void check_against_oracle(const Netlist& n, const FaultUniverse& u, const std::vector<Bits>& patterns,
                          const CoverageReport& r) {
    REQUIRE(r.first_detection.size() == u.size());
    for (std::size_t f = 0; f < u.size(); ++f) {
        const auto want = is_stuck_at(u.faults[f].kind) ? oracle::first_saf_detection(n, patterns, u.faults[f])
                                                        : oracle::first_tdf_detection(n, patterns, u.faults[f]);
        INFO(describe(n, u.faults[f]));
        REQUIRE(r.first_detection[f] == want);
    }
}

}  // namespace

TEST_SUITE("faultsim") {
    TEST_CASE("fault counts on a two-input AND") {
        const Netlist n = load_netlist(fixture("and2.bench"));
        const FaultUniverse u = enumerate_faults(n, {true, true});
        CHECK(u.count(FaultKind::SA0) + u.count(FaultKind::SA1) == 6);
        CHECK(u.count(FaultKind::STR) + u.count(FaultKind::STF) == 6);
        const FaultUniverse c = collapse(saf(n), n);
        CHECK(c.class_count() == 4);
        std::size_t sa0_class = 0;
        for (std::size_t f = 0; f < c.size(); ++f)
            if (c.faults[f].kind == FaultKind::SA0) sa0_class += c.faults[f].class_id == c.faults[0].class_id;
        CHECK(sa0_class == 3);
    }

    TEST_CASE("branch faults only on fan-out nets") {
        const Netlist n = load_netlist(fixture("ten_gate.bench"));
        const FaultUniverse u = saf(n);
        std::size_t expected = 0;
        for (std::uint32_t net = 0; net < n.net_count(); ++net) {
            const std::size_t s = n.sinks(NetId{net}).size();
            expected += 2 * (1 + (s > 1 ? s : 0));
        }
        CHECK(u.size() == expected);
        CHECK(tdf(n).size() == 2 * n.net_count());
        for (std::size_t f = 0; f < u.size(); ++f) CHECK(u.is_representative(f));
    }

    TEST_CASE("transition faults map to the stuck-at of the initial value") {
        FaultDescriptor f;
        f.kind = FaultKind::STR;
        CHECK(to_force(f).value == false);
        f.kind = FaultKind::STF;
        CHECK(to_force(f).value == true);
    }

    TEST_CASE("serial simulation matches the response oracle") {
        std::mt19937_64 rng(21);
        for (const char* name : {"ten_gate.bench", "seventeen_gate.bench"}) {
            const Netlist n = load_netlist(fixture(name));
            const auto patterns = oracle::random_patterns(rng, n.primary_inputs().size(), 40);
            const FaultUniverse u = saf(n);
            check_against_oracle(n, u, patterns, serial_fault_sim(n, u, patterns));
        }
    }

    TEST_CASE("serial simulation of a sequential netlist matches the oracle") {
        const Netlist n = load_netlist(fixture("seq3.bench"));
        std::mt19937_64 rng(22);
        const auto patterns = oracle::random_patterns(rng, 2, 30);
        const FaultUniverse u = saf(n);
        check_against_oracle(n, u, patterns, serial_fault_sim(n, u, patterns));
        CHECK_THROWS_AS(parallel_fault_sim(n, u, patterns), Error);
        const CoverageReport auto_path = simulate_faults(n, u, patterns);
        CHECK(auto_path.first_detection == serial_fault_sim(n, u, patterns).first_detection);
    }

    TEST_CASE("bit-parallel equals serial on random netlists") {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 30; ++trial) {
            const std::size_t inputs = 3 + rng() % 10;
            const Netlist n = oracle::random_netlist(rng, inputs, 10 + rng() % 60, 1 + rng() % 6);
            const std::size_t count = trial % 3 == 0 ? 67 : 1 + rng() % 200;  // word tail cases included
            const auto patterns = oracle::random_patterns(rng, inputs, count);
            const FaultUniverse u = collapse(saf(n), n);
            const CoverageReport s = serial_fault_sim(n, u, patterns);
            const CoverageReport p1 = parallel_fault_sim(n, u, patterns, {1, false});
            const CoverageReport p3 = parallel_fault_sim(n, u, patterns, {3, false});
            REQUIRE(s.first_detection == p1.first_detection);
            REQUIRE(p1.first_detection == p3.first_detection);
            CHECK(s.total.detected == p1.total.detected);
        }
    }

    TEST_CASE("parallel simulation matches the oracle including a partial last word") {
        const Netlist n = load_netlist(fixture("seventeen_gate.bench"));
        std::mt19937_64 rng(24);
        const auto patterns = oracle::random_patterns(rng, 8, 64 + 3);
        const FaultUniverse u = saf(n);
        check_against_oracle(n, u, patterns, parallel_fault_sim(n, u, patterns, {2, false}));
    }

    TEST_CASE("transition faults on a buffer") {
        const Netlist n = parse_netlist("INPUT(a)\nOUTPUT(y)\ny = BUF(a)");
        const FaultUniverse u = tdf(n);
        const std::vector<Bits> rise{{0}, {1}}, hold{{1}, {1}};
        const CoverageReport r = tdf_sim(n, u, rise);
        const CoverageReport h = tdf_sim(n, u, hold);
        for (std::size_t f = 0; f < u.size(); ++f) {
            if (u.faults[f].kind == FaultKind::STR) CHECK(r.first_detection[f] == 1U);
            if (u.faults[f].kind == FaultKind::STF) CHECK_FALSE(r.detected(f));
            CHECK_FALSE(h.detected(f));
        }
    }

    TEST_CASE("transition simulation matches the launch-capture oracle") {
        std::mt19937_64 rng(25);
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t inputs = 3 + rng() % 6;
            const Netlist n = oracle::random_netlist(rng, inputs, 8 + rng() % 25, 1 + rng() % 4);
            const auto patterns = oracle::random_patterns(rng, inputs, 50 + rng() % 40);
            const FaultUniverse u = tdf(n);
            const CoverageReport packed = tdf_sim(n, u, patterns, {1 + static_cast<unsigned>(trial % 3), false});
            check_against_oracle(n, u, patterns, packed);
            REQUIRE(tdf_sim(n, u, patterns, {1, true}).first_detection == packed.first_detection);
        }
        const Netlist seq = load_netlist(fixture("seq3.bench"));
        CHECK_THROWS_AS(tdf_sim(seq, tdf(seq), std::vector<Bits>{{0, 0}}), Error);
        CHECK_THROWS_AS(tdf_sim(seq, saf(seq), std::vector<Bits>{{0, 0}, {1, 1}}), Error);
    }

    TEST_CASE("collapsed classes are sound") {
        std::mt19937_64 rng(26);
        for (int trial = 0; trial < 15; ++trial) {
            const std::size_t inputs = 2 + rng() % 6;
            const Netlist n = oracle::random_netlist(rng, inputs, 5 + rng() % 20, 1 + rng() % 4);
            const auto patterns = oracle::exhaustive(inputs);
            const FaultUniverse u = collapse(saf(n), n);
            for (std::size_t f = 0; f < u.size(); ++f) {
                if (u.is_representative(f)) continue;
                const auto& rep = u.faults[u.faults[f].class_id];
                INFO(describe(n, u.faults[f]), " vs ", describe(n, rep));
                REQUIRE(oracle::responses(n, patterns, u.faults[f]) == oracle::responses(n, patterns, rep));
            }
        }
    }

    TEST_CASE("coverage grows with the pattern prefix") {
        const Netlist n = load_netlist(fixture("mid.bench"));
        std::mt19937_64 rng(27);
        const auto patterns = oracle::random_patterns(rng, 16, 300);
        const FaultUniverse u = collapse(enumerate_faults(n, {true, true}), n);
        double last = 0.0;
        for (std::size_t len : {1, 2, 5, 20, 64, 65, 150, 300}) {
            const CoverageReport r = simulate_faults(n, u, std::span(patterns).first(len));
            CHECK(r.total.coverage() >= last);
            last = r.total.coverage();
        }
        CHECK(last > 0.5);
    }

    TEST_CASE("coverage summary") {
        const Netlist n = load_netlist(fixture("and2.bench"));
        const FaultUniverse u = enumerate_faults(n, {true, true});
        const auto patterns = oracle::exhaustive(2);
        const CoverageReport r = simulate_faults(n, u, patterns);
        CHECK(r.total.faults == 12);
        const auto rows = coverage(r, u);
        bool saw_saf_total = false;
        for (const auto& row : rows)
            if (row.group == "SAF" && row.block == "total") {
                saw_saf_total = true;
                CHECK(row.tally.coverage() == 1.0);
            }
        CHECK(saw_saf_total);
        CHECK_THROWS_AS(coverage(simulate_faults(n, FaultUniverse{}, patterns), FaultUniverse{}), Error);
    }
}
