#include <doctest.h>

#include <random>
#include <unordered_set>

#include "corebist/bist.hpp"
#include "corebist/tpg.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace corebist;

namespace {

std::uint64_t period(const Polynomial& poly, std::uint64_t start) {
    AlfsrState s = seed(poly, start);
    std::uint64_t steps = 0;
    do {
        s = alfsr_step(s);
        ++steps;
    } while (s.reg != start && steps <= (std::uint64_t{1} << poly.degree()));
    return steps;
}

// Multiplicative-order check of x modulo the polynomial: x^(2^n-1) = 1 and
// x^((2^n-1)/q) != 1 for every prime q dividing 2^n-1.
std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, const Polynomial& p) {
    const unsigned n = p.degree();
    const std::uint64_t low = p.feedback_mask();  // bit 0 plus lower taps = x^n mod p
    std::uint64_t r = 0;
    for (int i = static_cast<int>(n) - 1; i >= 0; --i) {
        const bool top = (r >> (n - 1)) & 1U;
        r = (r << 1) & low_mask(n);
        if (top) r ^= low;
        if ((b >> i) & 1U) r ^= a;
    }
    return r;
}

std::uint64_t powmod_x(std::uint64_t e, const Polynomial& p) {
    std::uint64_t result = 1, base = 2;
    if (p.degree() == 1) base = p.feedback_mask();
    while (e) {
        if (e & 1) result = mulmod(result, base, p);
        base = mulmod(base, base, p);
        e >>= 1;
    }
    return result;
}

std::vector<std::uint64_t> prime_factors(std::uint64_t m) {
    std::vector<std::uint64_t> f;
    for (std::uint64_t q = 2; q <= m / q; ++q) {
        if (m % q) continue;
        f.push_back(q);
        while (m % q == 0) m /= q;
    }
    if (m > 1) f.push_back(m);
    return f;
}

bool primitive(const Polynomial& p) {
    const std::uint64_t order = low_mask(p.degree());
    if (powmod_x(order, p) != 1) return false;
    for (std::uint64_t q : prime_factors(order))
        if (powmod_x(order / q, p) == 1) return false;
    return true;
}

}  // namespace

TEST_SUITE("tpg") {
    TEST_CASE("polynomial text form") {
        const Polynomial p = Polynomial::parse("x^20+x^3+1");
        CHECK(p.degree() == 20);
        CHECK(p.to_string() == "x^20+x^3+1");
        CHECK(p.feedback_mask() == ((1U << 3) | 1U));
        CHECK(Polynomial::parse(" x^4 + x + 1 ") == Polynomial::from_taps({4, 1}));
        CHECK_THROWS_AS(Polynomial::parse("x^4+x"), Error);
        CHECK_THROWS_AS(Polynomial::parse("x^65+x+1"), Error);
        CHECK_THROWS_AS(Polynomial::from_taps({1}), Error);
    }

    TEST_CASE("orbit lengths") {
        CHECK(period(Polynomial::parse("x^4+x+1"), 0b0001) == 15);
        CHECK(period(Polynomial::parse("x^4+x^2+1"), 0b0001) < 15);
    }

    TEST_CASE("seed validation") {
        const Polynomial p = Polynomial::parse("x^4+x+1");
        CHECK_THROWS_AS(seed(p, bits_from_string("0000")), Error);
        CHECK(seed(p, bits_from_string("1001")).reg == 0b1001);
        CHECK_THROWS_AS(seed(default_alfsr_polynomial(), Bits(19, 1)), Error);
        CHECK_THROWS_AS(seed(p, std::uint64_t{0x10}), Error);
    }

    TEST_CASE("register bits follow the linear recurrence") {
        for (const Polynomial& p : {default_alfsr_polynomial(), default_polynomial(16), default_polynomial(5),
                                    Polynomial::parse("x^4+x^2+1")}) {
            const std::uint64_t start = 0x5A5A5 & low_mask(p.degree());
            const auto seq = oracle::lfsr_sequence(p.taps(), start, 300);
            AlfsrState s = seed(p, start);
            for (std::size_t t = 0; t < 300; ++t) {
                for (unsigned i = 0; i < p.degree(); ++i) REQUIRE(((s.reg >> i) & 1U) == seq[t + i]);
                s = alfsr_step(s);
            }
        }
    }

    TEST_CASE("default polynomials are primitive") {
        for (unsigned d = 2; d <= 16; ++d) CHECK(period(default_polynomial(d), 1) == low_mask(d));
        for (unsigned d = 2; d <= 32; ++d) CHECK_MESSAGE(primitive(default_polynomial(d)), "degree ", d);
        CHECK(primitive(default_polynomial(64)));
        CHECK(primitive(default_alfsr_polynomial()));
        CHECK_FALSE(primitive(Polynomial::parse("x^4+x^2+1")));
    }

    TEST_CASE("alfsr_step is a bijection on non-zero states") {
        const Polynomial p = default_alfsr_polynomial();
        std::mt19937_64 rng(42);
        std::unordered_set<std::uint64_t> seen_from, seen_to;
        for (int i = 0; i < 20000; ++i) {
            const std::uint64_t v = 1 + rng() % low_mask(20);
            if (!seen_from.insert(v).second) continue;
            const std::uint64_t next = alfsr_step(seed(p, v)).reg;
            CHECK(next != 0);
            CHECK(seen_to.insert(next).second);
            // inverse: the old bit 0 is recovered from the new top bit and the taps
            const std::uint64_t shifted = (next << 1) & low_mask(20);
            const std::uint64_t parity = std::popcount(shifted & p.feedback_mask() & ~std::uint64_t{1}) & 1U;
            const std::uint64_t bit0 = ((next >> 19) & 1U) ^ parity;
            REQUIRE((shifted | bit0) == v);
        }
    }

    TEST_CASE("constraint schedules") {
        ConstraintProgram single{4, {{bits_from_string("1010"), 3}}, true};
        for (int c = 0; c < 6; ++c) CHECK(bits_to_string(cg_step(single, c)) == "1010");
        ConstraintProgram two{2, {{bits_from_string("00"), 1}, {bits_from_string("11"), 2}}, true};
        std::string seq;
        for (int c = 0; c < 6; ++c) seq += bits_to_string(cg_step(two, c)) + ",";
        CHECK(seq == "00,11,11,00,11,11,");
        two.cyclic = false;
        CHECK(bits_to_string(cg_step(two, 100)) == "11");
        CHECK_THROWS_AS((ConstraintProgram{2, {{bits_from_string("000"), 1}}, false}.validate()), Error);
        CHECK_THROWS_AS((ConstraintProgram{2, {{bits_from_string("00"), 0}}, false}.validate()), Error);

        const BistPlan plan = load_plan(fixture("ldpc_like_core.plan.json"));
        CHECK(plan.bindings[0].cg->program.port_width == 4);
    }

    TEST_CASE("port binding situations") {
        AlfsrState alfsr = seed(default_alfsr_polynomial(), 0x5A5A5);
        const PortBinding a = modular_binding("a", 20, 20);
        CHECK(classify_situation(a, 20) == Situation::A);
        CHECK(bits_to_word(assemble_pattern(a, alfsr, 0)) == alfsr.reg);

        const PortBinding b = modular_binding("b", 40, 20);
        CHECK(classify_situation(b, 20) == Situation::B);
        CHECK(bits_to_word(assemble_pattern(b, alfsr, 0)) == (alfsr.reg | (alfsr.reg << 20)));

        const NamedConstraint cg{"sel", {4, {{bits_from_string("0110"), 1}}, false}};
        const PortBinding c = modular_binding("c", 20, 20, cg, {16, 17, 18, 19});
        CHECK(classify_situation(c, 20) == Situation::C);
        CHECK_THROWS_AS(validate_binding(modular_binding("x", 8, 20, cg, {0, 1, 2}), 8, 20), Error);
        CHECK_THROWS_AS(validate_binding(a, 21, 20), Error);
    }

    TEST_CASE("situation d: 54-bit port, 4 constraint bits, replicated ALFSR") {
        const BistPlan plan = load_plan(fixture("ldpc_like_core.plan.json"));
        const PortBinding& bn = plan.bindings[0];
        REQUIRE(bn.sources.size() == 54);
        CHECK(classify_situation(bn, 20) == Situation::D);
        AlfsrState alfsr = seed(plan.alfsr.polynomial, plan.alfsr.seed);
        for (std::uint64_t cycle = 0; cycle < 4096; cycle += 97) {
            const Bits got = assemble_pattern(bn, alfsr, cycle);
            const Bits sel = cg_step(bn.cg->program, cycle);
            for (std::size_t i = 0; i < 54; ++i) {
                // Binding table from the plan file: bits 0..3 from the CG, others i mod 20.
                const std::uint8_t want = i < 4 ? sel[i] : static_cast<std::uint8_t>((alfsr.reg >> (i % 20)) & 1U);
                REQUIRE(got[i] == want);
            }
            for (int k = 0; k < 97; ++k) alfsr = alfsr_step(alfsr);
        }
    }

    TEST_CASE("constraint bits ignore the ALFSR state") {
        const BistPlan plan = load_plan(fixture("ldpc_like_core.plan.json"));
        const PortBinding& bn = plan.bindings[0];
        const Bits x = assemble_pattern(bn, seed(plan.alfsr.polynomial, 1), 3500);
        const Bits y = assemble_pattern(bn, seed(plan.alfsr.polynomial, 0xFFFFF), 3500);
        for (std::size_t i = 0; i < 4; ++i) CHECK(x[i] == y[i]);
        const Bits z = assemble_pattern(bn, seed(plan.alfsr.polynomial, 1), 0);
        for (std::size_t i = 4; i < 54; ++i) CHECK(x[i] == z[i]);
    }
}
