#include <doctest.h>

#include <random>
#include <sstream>

#include "corebist/diagnosis.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace corebist;

namespace {

FaultUniverse saf(const Netlist& n) { return enumerate_faults(n, {true, false}); }

// Sorted class lists for comparison, ignoring numbering.
std::vector<std::vector<std::uint32_t>> canonical(std::vector<std::vector<std::uint32_t>> classes) {
    for (auto& c : classes) std::sort(c.begin(), c.end());
    std::sort(classes.begin(), classes.end());
    return classes;
}

bool is_refinement(const ClassReport& fine, const ClassReport& coarse) {
    // every fine class lies inside one coarse class (undetected count as one class)
    for (const auto& c : fine.classes)
        for (std::uint32_t f : c)
            if (coarse.class_of[f] != coarse.class_of[c.front()]) return false;
    return true;
}

}  // namespace

TEST_SUITE("diagnosis") {
    TEST_CASE("two-input AND classes") {
        const Netlist n = load_netlist(fixture("and2.bench"));
        const FaultUniverse u = saf(n);
        const ClassReport r = classify(build_matrix(n, u, oracle::exhaustive(2)));
        CHECK(r.total.faults == 6);
        CHECK(r.total.classes == 4);
        CHECK(r.total.max_size == 3);
        CHECK(r.undetected.empty());
        CHECK(r.total.mean_size == doctest::Approx(1.5));
        for (const auto& c : r.classes)
            if (c.size() == 3)
                for (std::uint32_t f : c) CHECK(u.faults[f].kind == FaultKind::SA0);
    }

    TEST_CASE("pattern-level matrix matches the response oracle") {
        for (const char* name : {"seventeen_gate.bench", "ten_gate.bench", "seq3.bench"}) {
            const Netlist n = load_netlist(fixture(name));
            std::mt19937_64 rng(31);
            const auto patterns = oracle::random_patterns(rng, n.primary_inputs().size(), 48);
            const FaultUniverse u = saf(n);
            const DiagnosticMatrix m = build_matrix(n, u, patterns);
            REQUIRE(m.fault_count == u.size());
            CHECK(m.columns() == 48);
            std::vector<std::set<std::pair<std::size_t, std::size_t>>> fails;
            std::vector<bool> detected;
            for (std::size_t f = 0; f < u.size(); ++f) {
                fails.push_back(oracle::failing(n, patterns, u.faults[f]));
                detected.push_back(!fails.back().empty());
                for (std::size_t p = 0; p < patterns.size(); ++p) {
                    const bool want = fails[f].lower_bound({p, 0}) != fails[f].end() &&
                                      fails[f].lower_bound({p, 0})->first == p;
                    REQUIRE(m.detected_by(f, p) == want);
                }
            }
            const auto want = oracle::pairwise_partition(u.size(), detected,
                                                         [&](std::uint32_t a, std::uint32_t b) { return fails[a] == fails[b]; });
            const ClassReport r = classify(m);
            CHECK(canonical(r.classes) == canonical(want));
            std::size_t undetected = 0;
            for (bool d : detected) undetected += !d;
            CHECK(r.undetected.size() == undetected);
        }
    }

    TEST_CASE("packed and scalar matrices agree") {
        std::mt19937_64 rng(32);
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t inputs = 3 + rng() % 8;
            const Netlist n = oracle::random_netlist(rng, inputs, 10 + rng() % 40, 1 + rng() % 5);
            const auto patterns = oracle::random_patterns(rng, inputs, 1 + rng() % 150);
            const FaultUniverse u = collapse(saf(n), n);
            const DiagnosticMatrix a = build_matrix(n, u, patterns, {2, false});
            const DiagnosticMatrix b = build_matrix(n, u, patterns, {1, true});
            for (std::size_t f = 0; f < u.size(); ++f) REQUIRE(a.row_bytes(f) == b.row_bytes(f));
        }
    }

    TEST_CASE("collapsed faults share a syndrome") {
        const Netlist n = load_netlist(fixture("seventeen_gate.bench"));
        const FaultUniverse u = collapse(saf(n), n);
        const DiagnosticMatrix m = build_matrix(n, u, oracle::exhaustive(8));
        const ClassReport r = classify(m);
        for (std::size_t f = 0; f < u.size(); ++f) CHECK(r.class_of[f] == r.class_of[u.faults[f].class_id]);
    }

    TEST_CASE("more patterns only split classes") {
        const Netlist n = load_netlist(fixture("mid.bench"));
        const FaultUniverse u = collapse(saf(n), n);
        std::mt19937_64 rng(33);
        const auto p1 = oracle::random_patterns(rng, 16, 40);
        const auto p2 = oracle::random_patterns(rng, 16, 40);
        const RefineReport r = refine(build_matrix(n, u, p1), build_matrix(n, u, p2));
        CHECK(is_refinement(r.after, r.before));
        CHECK(r.after.total.classes + (r.after.undetected.empty() ? 0 : 1) >=
              r.before.total.classes + (r.before.undetected.empty() ? 0 : 1));
        CHECK(r.after.total.mean_size_with_undetected <= r.before.total.mean_size_with_undetected);
        CHECK(r.split_classes > 0);

        std::vector<Bits> both = p1;
        both.insert(both.end(), p2.begin(), p2.end());
        const ClassReport doubled = classify(build_matrix(n, u, both));
        CHECK(canonical(doubled.classes) == canonical(r.after.classes));

        const BistPlan plan = load_plan(fixture("mid_misr2.plan.json"));
        CHECK_THROWS_AS(refine(build_matrix(n, u, p1), build_matrix(n, u, plan, Granularity::Signature)), Error);
        FaultUniverse part = saf(n);
        part.faults.resize(10);
        CHECK_THROWS_AS(refine(build_matrix(n, u, p1), build_matrix(n, part, p2)), Error);
    }

    TEST_CASE("doubling the plan length does not raise the mean class size") {
        const Netlist n = load_netlist(fixture("ldpc_like_cu.bench"));
        const FaultUniverse u = collapse(saf(n), n);
        BistPlan plan = default_plan(n, {256, 12, 16});
        const ClassReport a = classify(build_matrix(n, u, plan, Granularity::Pattern));
        plan.pattern_count = 512;
        const ClassReport b = classify(build_matrix(n, u, plan, Granularity::Pattern));
        CHECK(is_refinement(b, a));
        CHECK(b.total.mean_size_with_undetected <= a.total.mean_size_with_undetected);
    }

    TEST_CASE("signature classes are coarser than pattern classes") {
        const Netlist n = load_netlist(fixture("mid.bench"));
        const FaultUniverse u = collapse(saf(n), n);
        for (const char* planfile : {"mid_misr2.plan.json", ""}) {
            const BistPlan plan = *planfile ? load_plan(fixture(planfile)) : default_plan(n, {1024, 12, 16});
            const ClassReport pat = classify(build_matrix(n, u, plan, Granularity::Pattern));
            const DiagnosticMatrix sm = build_matrix(n, u, plan, Granularity::Signature);
            const ClassReport sig = classify(sm);
            CHECK(is_refinement(pat, sig));
            CHECK(sig.total.classes <= pat.total.classes);
            CHECK(sig.total.detected <= pat.total.detected);
            REQUIRE(sm.golden.size() == 1);
            CHECK(sm.golden[0] == run_selftest(n, plan).signatures[0].value);
        }
    }

    TEST_CASE("per-block statistics on the case study") {
        const Netlist n = load_netlist(fixture("ldpc_like_core.bench"));
        BistPlan plan = load_plan(fixture("ldpc_like_core.plan.json"));
        plan.pattern_count = 256;
        const FaultUniverse u = collapse(saf(n), n);
        const ClassReport r = classify(build_matrix(n, u, plan, Granularity::Pattern, {2, false}));
        REQUIRE(r.blocks.size() == 3);
        std::size_t faults = 0, detected = 0;
        for (const auto& b : r.blocks) {
            faults += b.faults;
            detected += b.detected;
            CHECK(b.max_size <= r.total.max_size);
        }
        CHECK(detected <= r.total.detected);
        CHECK(faults <= r.total.faults);
        const auto j = class_report_json(r, u, n);
        CHECK(j["blocks"].size() == 3);
        CHECK(j["granularity"] == "pattern");
    }

    TEST_CASE("matrix export and import") {
        const Netlist n = load_netlist(fixture("seventeen_gate.bench"));
        const FaultUniverse u = collapse(saf(n), n);
        std::mt19937_64 rng(34);
        const auto patterns = oracle::random_patterns(rng, 8, 70);
        for (const DiagnosticMatrix& m :
             {build_matrix(n, u, patterns), build_matrix(n, u, default_plan(n, {100, 12, 16}), Granularity::Signature)}) {
            std::stringstream buf;
            export_matrix(m, u, n, {{"source", "test"}}, buf);
            CHECK(buf.str().substr(0, 4) == "CBDM");
            nlohmann::json header;
            const DiagnosticMatrix back = import_matrix(buf, &header);
            CHECK(back.granularity == m.granularity);
            CHECK(back.fault_count == m.fault_count);
            CHECK(back.columns() == m.columns());
            for (std::size_t f = 0; f < m.fault_count; ++f) REQUIRE(back.row_bytes(f) == m.row_bytes(f));
            CHECK(header["faults"].size() == u.size());
            CHECK(header["patterns"]["source"] == "test");
            CHECK(canonical(classify(back).classes) == canonical(classify(m).classes));
        }
        std::stringstream junk("XXXX");
        CHECK_THROWS_AS(import_matrix(junk), Error);
    }

    TEST_CASE("granularity names and empty universes") {
        CHECK(parse_granularity("signature") == Granularity::Signature);
        CHECK(to_string(Granularity::Pattern) == "pattern");
        CHECK_THROWS_AS(parse_granularity("cycle"), Error);
        const Netlist n = load_netlist(fixture("and2.bench"));
        CHECK_THROWS_AS(build_matrix(n, FaultUniverse{}, oracle::exhaustive(2)), Error);
        CHECK_THROWS_AS(build_matrix(n, enumerate_faults(n, {false, true}), oracle::exhaustive(2)), Error);
    }
}
