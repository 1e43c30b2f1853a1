#include <doctest.h>

#include <random>

#include "corebist/bist.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace corebist;

namespace {

Bits schedule_value(const ConstraintProgram& p, std::uint64_t cycle) {
    std::uint64_t total = 0;
    for (const auto& e : p.schedule) total += e.hold;
    if (p.cyclic) cycle %= total;
    for (const auto& e : p.schedule) {
        if (cycle < e.hold) return e.value;
        cycle -= e.hold;
    }
    return p.schedule.back().value;
}

// Signatures rebuilt stage by stage: recurrence-generated ALFSR bits, the
// binding table, the recursive circuit model, parity folding and a bit-level
// MISR.
std::vector<std::uint64_t> pipeline_oracle(const Netlist& n, const BistPlan& plan) {
    const Polynomial& ap = plan.alfsr.polynomial;
    const auto a = oracle::lfsr_sequence(ap.taps(), plan.alfsr.seed, plan.pattern_count + ap.degree());
    std::vector<Bits> patterns;
    for (std::uint64_t t = 0; t < plan.pattern_count; ++t) {
        Bits pi(n.primary_inputs().size(), 0);
        for (const PortBinding& b : plan.bindings) {
            const Block& blk = n.blocks()[*n.find_block(b.block)];
            for (std::size_t i = 0; i < b.sources.size(); ++i) {
                const BitSource& s = b.sources[i];
                const std::uint8_t v =
                    s.kind == SourceKind::Alfsr ? a[t + s.index] : schedule_value(b.cg->program, t)[s.index];
                for (std::size_t k = 0; k < pi.size(); ++k)
                    if (n.primary_inputs()[k] == blk.inputs[i]) pi[k] = v;
            }
        }
        patterns.push_back(pi);
    }
    const auto obs = oracle::observation_nets(n);
    const auto resp = oracle::responses(n, patterns, std::nullopt);
    std::vector<std::uint64_t> out;
    for (const MisrAssignment& m : plan.misrs) {
        const Block& blk = n.blocks()[*n.find_block(m.block)];
        const unsigned k = m.polynomial.degree();
        std::vector<Bits> stream;
        for (const auto& r : resp) {
            Bits w(k, 0);
            for (std::size_t i = 0; i < blk.outputs.size(); ++i) {
                const auto pos = std::find(obs.begin(), obs.end(), blk.outputs[i]) - obs.begin();
                w[i % k] ^= r[static_cast<std::size_t>(pos)] ? 1 : 0;
            }
            stream.push_back(w);
        }
        out.push_back(bits_to_word(oracle::misr(m.polynomial.taps(), stream)));
    }
    return out;
}

std::vector<std::uint64_t> values(const std::vector<Signature>& s) {
    std::vector<std::uint64_t> v;
    for (const auto& x : s) v.push_back(x.value);
    return v;
}

}  // namespace

TEST_SUITE("bist") {
    TEST_CASE("default plan shape") {
        const Netlist n = load_netlist(fixture("ten_gate.bench"));
        const BistPlan plan = default_plan(n);
        REQUIRE(plan.bindings.size() == 1);
        CHECK(plan.bindings[0].block == "ten_gate");
        CHECK(plan.misrs[0].polynomial.degree() == 3);
        CHECK(plan.misrs[0].cascade.in_width == 3);
        CHECK(classify_situation(plan.bindings[0], 20) == Situation::A);
        CHECK_NOTHROW(validate_plan(plan, n));
    }

    TEST_CASE("plan validation") {
        const Netlist n = load_netlist(fixture("ten_gate.bench"));
        BistPlan plan = default_plan(n);
        plan.pattern_count = 5000;
        CHECK_THROWS_AS(validate_plan(plan, n), Error);
        plan = default_plan(n);
        plan.misrs[0].cascade.out_width = 4;
        CHECK_THROWS_AS(validate_plan(plan, n), Error);
        plan = default_plan(n);
        plan.bindings[0].block = "nope";
        CHECK_THROWS_AS(validate_plan(plan, n), Error);
        plan = default_plan(n);
        plan.counter_width = 0;
        CHECK_THROWS_AS(validate_plan(plan, n), Error);

        const Netlist core = load_netlist(fixture("ldpc_like_core.bench"));
        BistPlan cp = load_plan(fixture("ldpc_like_core.plan.json"));
        CHECK_NOTHROW(validate_plan(cp, core));
        cp.bindings.push_back(cp.bindings[0]);
        cp.misrs.push_back(cp.misrs[0]);
        CHECK_THROWS_AS(validate_plan(cp, core), Error);
    }

    TEST_CASE("signatures equal the stage-by-stage oracle") {
        const Netlist n = load_netlist(fixture("ten_gate.bench"));
        BistPlan plan = default_plan(n, {64, 12, 16});
        CHECK(values(run_selftest(n, plan).signatures) == pipeline_oracle(n, plan));

        const Netlist mid = load_netlist(fixture("mid.bench"));
        const BistPlan mp = default_plan(mid, {300, 12, 16});
        CHECK(values(run_selftest(mid, mp).signatures) == pipeline_oracle(mid, mp));

        const Netlist seq = load_netlist(fixture("seq3.bench"));
        const BistPlan sp = default_plan(seq, {100, 12, 16});
        CHECK(values(run_selftest(seq, sp).signatures) == pipeline_oracle(seq, sp));
    }

    TEST_CASE("case-study signatures") {
        const Netlist n = load_netlist(fixture("ldpc_like_core.bench"));
        const BistPlan plan = load_plan(fixture("ldpc_like_core.plan.json"));
        BistSession s(n, plan);
        s.set_count(plan.pattern_count);
        s.start();
        const std::vector<std::uint64_t> frozen{0x7034, 0x3a03, 0x594c};
        for (unsigned sel = 0; sel < 3; ++sel) {
            s.select(sel);
            CHECK(s.selected_signature().value == frozen[sel]);
        }
        CHECK_THROWS_AS(s.select(3), Error);
        CHECK(values(s.signatures()) == pipeline_oracle(n, plan));
    }

    TEST_CASE("golden run is deterministic and passes") {
        const Netlist n = load_netlist(fixture("ldpc_like_core.bench"));
        BistPlan plan = load_plan(fixture("ldpc_like_core.plan.json"));
        const auto g1 = compute_golden(n, plan);
        BistPlan again = load_plan(fixture("ldpc_like_core.plan.json"));
        CHECK(compute_golden(n, again) == g1);
        const BistResult r = run_selftest(n, plan, std::nullopt, true);
        CHECK(r.all_pass());
        CHECK(r.patterns_applied == 4096);
        CHECK_THROWS_AS(run_selftest(n, load_plan(fixture("ldpc_like_core.plan.json")), std::nullopt, true), Error);
    }

    TEST_CASE("an injected fault fails its own block") {
        const Netlist n = load_netlist(fixture("ten_gate.bench"));
        BistPlan plan = default_plan(n, {256, 12, 16});
        compute_golden(n, plan);
        const FaultUniverse u = enumerate_faults(n, {true, false});
        const auto faulty = faulty_signatures(n, plan, u);
        std::size_t failing = 0;
        for (std::size_t f = 0; f < u.size(); ++f) {
            const BistResult r = run_selftest(n, plan, u.faults[f]);
            REQUIRE(r.pass.has_value());
            const bool changed = faulty[f][0] != (*plan.golden)[0].value;
            CHECK(r.pass->at(0) == !changed);
            CHECK(r.signatures[0].value == faulty[f][0]);
            failing += changed;
        }
        CHECK(failing > u.size() / 2);
    }

    TEST_CASE("fast faulty signatures equal per-fault sessions") {
        const Netlist n = load_netlist(fixture("ldpc_like_cu.bench"));
        BistPlan plan = default_plan(n, {200, 12, 16});
        const FaultUniverse u = collapse(enumerate_faults(n, {true, false}), n);
        const auto fast = faulty_signatures(n, plan, u, {2, false});
        const auto slow = faulty_signatures(n, plan, u, {1, true});
        CHECK(fast == slow);
        for (std::size_t f = 0; f < u.size(); f += 97) CHECK(values(run_selftest(n, plan, u.faults[f]).signatures) == fast[f]);
    }

    TEST_CASE("misr detection and 2-bit aliasing") {
        const Netlist n = load_netlist(fixture("mid.bench"));
        BistPlan narrow = load_plan(fixture("mid_misr2.plan.json"));
        compute_golden(n, narrow);
        const FaultUniverse u = collapse(enumerate_faults(n, {true, false}), n);
        const MisrDetection d2 = misr_detection_rate(n, narrow, u);
        CHECK(d2.detected_misr + d2.aliased.size() == d2.detected_pre);
        CHECK(d2.aliased.size() > 0);
        CHECK(d2.rate() < 1.0);
        for (std::uint32_t f : d2.aliased) CHECK(run_selftest(n, narrow, u.faults[f]).signatures[0].value ==
                                                 run_selftest(n, narrow).signatures[0].value);

        BistPlan wide = narrow;
        wide.misrs[0].polynomial = default_polynomial(8);
        wide.misrs[0].cascade.out_width = 8;
        compute_golden(n, wide);
        const MisrDetection d8 = misr_detection_rate(n, wide, u);
        CHECK(d8.detected_pre == d2.detected_pre);
        CHECK(d8.aliased.size() < d2.aliased.size());

        const FaultUniverse tdf_only = enumerate_faults(n, {false, true});
        CHECK_THROWS_AS(misr_detection_rate(n, narrow, tdf_only), Error);
    }

    TEST_CASE("control unit phases") {
        const Netlist n = load_netlist(fixture("ten_gate.bench"));
        BistSession s(n, default_plan(n, {64, 12, 16}));
        CHECK(s.control().phase == Phase::Idle);
        s.set_count(10);
        CHECK(s.control().phase == Phase::Loading);
        s.step(3);
        CHECK(s.control().phase == Phase::Running);
        CHECK(s.control().pattern_counter == 3);
        CHECK(s.control().test_enable);
        CHECK_THROWS_AS(s.set_count(5), Error);
        s.step(100);
        CHECK(s.control().phase == Phase::Done);
        CHECK(s.control().pattern_counter == 10);
        CHECK_FALSE(s.control().test_enable);
        const auto sig = s.signatures();
        s.step(5);
        CHECK(s.signatures() == sig);
        s.reset();
        CHECK(s.control().phase == Phase::Idle);
        CHECK(s.signatures()[0].value == 0);
        CHECK_THROWS_AS(s.set_count(5000), Error);
    }

    TEST_CASE("stepwise and one-shot runs agree") {
        const Netlist n = load_netlist(fixture("seq3.bench"));
        const BistPlan plan = default_plan(n, {77, 12, 16});
        BistSession a(n, plan), b(n, plan);
        a.set_count(77);
        a.start();
        b.set_count(77);
        for (int i = 0; i < 80; ++i) b.step();
        CHECK(a.signatures() == b.signatures());
        CHECK(a.alfsr() == b.alfsr());
    }

    TEST_CASE("plan json round trip") {
        const BistPlan plan = load_plan(fixture("ldpc_like_core.plan.json"));
        const nlohmann::json j = plan_to_json(plan);
        CHECK(plan_to_json(plan_from_json(j)) == j);
        CHECK(nlohmann::json::parse(read_file(fixture("ldpc_like_core.plan.json"))) == j);

        const Netlist n = load_netlist(fixture("ldpc_like_core.bench"));
        BistPlan with_golden = plan;
        compute_golden(n, with_golden);
        const BistPlan back = plan_from_json(plan_to_json(with_golden));
        REQUIRE(back.golden.has_value());
        CHECK(*back.golden == *with_golden.golden);
        CHECK(back.bindings == plan.bindings);

        nlohmann::json bad = j;
        bad["schema_version"] = 2;
        CHECK_THROWS_AS(plan_from_json(bad), Error);
        bad = j;
        bad["alfsr"]["configuration"] = "galois";
        CHECK_THROWS_AS(plan_from_json(bad), Error);
        bad = j;
        bad.erase("misrs");
        CHECK_THROWS_AS(plan_from_json(bad), Error);
        CHECK_THROWS_AS(load_plan(fixture("missing.plan.json")), RuntimeError);
    }

    TEST_CASE("generated patterns follow the bindings") {
        const Netlist n = load_netlist(fixture("ldpc_like_core.bench"));
        const BistPlan plan = load_plan(fixture("ldpc_like_core.plan.json"));
        const auto patterns = generate_patterns(n, plan, 300);
        AlfsrState alfsr = seed(plan.alfsr.polynomial, plan.alfsr.seed);
        for (std::uint64_t t = 0; t < 300; ++t) {
            Bits word;
            for (const PortBinding& b : plan.bindings) {
                const Bits part = assemble_pattern(b, alfsr, t);
                word.insert(word.end(), part.begin(), part.end());
            }
            REQUIRE(pattern_from_block_inputs(n, plan, word) == patterns[t]);
            alfsr = alfsr_step(alfsr);
        }
        CHECK(block_input_width(n, plan) == 54 + 53 + 45);
    }
}
