#include "corebist/tpg.hpp"

#include <algorithm>
#include <bit>
#include <cctype>

namespace corebist {

Polynomial Polynomial::from_taps(std::vector<unsigned> taps) {
    std::sort(taps.begin(), taps.end(), std::greater<>());
    taps.erase(std::unique(taps.begin(), taps.end()), taps.end());
    if (!taps.empty() && taps.back() == 0) taps.pop_back();  // constant term is implicit
    if (taps.empty()) throw Error("polynomial has no terms above x^0");
    if (taps.front() < kMinDegree || taps.front() > kMaxDegree)
        throw Error("polynomial degree " + std::to_string(taps.front()) + " outside 2..64");
    Polynomial p;
    p.taps_ = std::move(taps);
    p.feedback_mask_ = 1;
    for (unsigned t : p.taps_)
        if (t < p.degree()) p.feedback_mask_ |= std::uint64_t{1} << t;
    return p;
}

Polynomial Polynomial::parse(std::string_view text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    std::vector<unsigned> taps;
    bool constant = false;
    std::size_t pos = 0;
    auto fail = [&] { throw Error("malformed polynomial \"" + std::string(text) + "\""); };
    while (pos < s.size()) {
        std::size_t end = s.find('+', pos);
        if (end == std::string::npos) end = s.size();
        const std::string term = s.substr(pos, end - pos);
        if (term == "1") {
            constant = true;
        } else if (term == "x" || term == "X") {
            taps.push_back(1);
        } else if (term.size() > 2 && (term[0] == 'x' || term[0] == 'X') && term[1] == '^') {
            const auto exponent = parse_uint(term.substr(2));
            if (exponent == 0 || exponent > kMaxDegree) fail();
            taps.push_back(static_cast<unsigned>(exponent));
        } else {
            fail();
        }
        pos = end + 1;
        if (end == s.size()) break;
    }
    if (!constant) throw Error("polynomial \"" + std::string(text) + "\" lacks the +1 term");
    return from_taps(std::move(taps));
}

std::string Polynomial::to_string() const {
    std::string out;
    for (unsigned t : taps_) {
        out += t == 1 ? "x" : "x^" + std::to_string(t);
        out += "+";
    }
    return out + "1";
}

Polynomial default_polynomial(unsigned degree) {
    // Primitive polynomials, taps listed without the constant term.
    static const std::vector<std::vector<unsigned>> kTable = {
        {},          {},          {2, 1},      {3, 2},         {4, 1},      {5, 3},
        {6, 5},      {7, 6},      {8, 4, 3, 2}, {9, 5},        {10, 7},     {11, 9},
        {12, 6, 4, 1}, {13, 4, 3, 1}, {14, 5, 3, 1}, {15, 14}, {16, 15, 13, 4}, {17, 14},
        {18, 11},    {19, 6, 2, 1}, {20, 3},   {21, 19},       {22, 21},    {23, 18},
        {24, 23, 22, 17}, {25, 22}, {26, 6, 2, 1}, {27, 5, 2, 1}, {28, 25}, {29, 27},
        {30, 6, 4, 1}, {31, 28},  {32, 22, 2, 1},
    };
    if (degree == 64) return Polynomial::from_taps({64, 63, 61, 60});
    if (degree < kTable.size() && !kTable[degree].empty()) return Polynomial::from_taps(kTable[degree]);
    throw Error("no built-in polynomial of degree " + std::to_string(degree));
}

Polynomial default_alfsr_polynomial() { return Polynomial::from_taps({20, 3}); }

std::uint64_t lfsr_transition(const Polynomial& poly, std::uint64_t reg) {
    const unsigned n = poly.degree();
    const std::uint64_t feedback = std::popcount(reg & poly.feedback_mask()) & 1U;
    return ((reg >> 1) | (feedback << (n - 1))) & low_mask(n);
}

AlfsrState seed(const Polynomial& poly, std::uint64_t value) {
    if (poly.degree() < 64 && (value >> poly.degree()) != 0)
        throw Error("seed " + to_hex(value, 64) + " wider than degree " +
                    std::to_string(poly.degree()));
    if (value == 0) throw Error("all-zero ALFSR seed is a fixed point");
    return {poly, value};
}

AlfsrState seed(const Polynomial& poly, const Bits& seed_bits) {
    if (seed_bits.size() != poly.degree())
        throw Error("seed length " + std::to_string(seed_bits.size()) + " does not match degree " +
                    std::to_string(poly.degree()));
    return seed(poly, bits_to_word(seed_bits));
}

AlfsrState alfsr_step(const AlfsrState& state) {
    return {state.polynomial, lfsr_transition(state.polynomial, state.reg)};
}

void ConstraintProgram::validate() const {
    if (port_width == 0) throw Error("constraint port width must be at least 1");
    if (schedule.empty()) throw Error("constraint schedule is empty");
    for (const ScheduleEntry& e : schedule) {
        if (e.value.size() != port_width)
            throw Error("constraint value " + bits_to_string(e.value) + " does not fit port width " +
                        std::to_string(port_width));
        if (e.hold == 0) throw Error("constraint hold count must be at least 1");
    }
}

std::uint64_t ConstraintProgram::length() const {
    std::uint64_t total = 0;
    for (const ScheduleEntry& e : schedule) total += e.hold;
    return total;
}

Bits cg_step(const ConstraintProgram& program, std::uint64_t cycle) {
    const std::uint64_t total = program.length();
    if (program.schedule.empty() || total == 0) throw Error("constraint schedule is empty");
    if (program.cyclic) {
        cycle %= total;
    } else if (cycle >= total) {
        return program.schedule.back().value;
    }
    for (const ScheduleEntry& e : program.schedule) {
        if (cycle < e.hold) return e.value;
        cycle -= e.hold;
    }
    return program.schedule.back().value;
}

PortBinding modular_binding(std::string block, std::size_t input_width, unsigned alfsr_degree,
                            std::optional<NamedConstraint> cg,
                            const std::vector<std::uint32_t>& cg_bits) {
    PortBinding binding;
    binding.block = std::move(block);
    binding.sources.resize(input_width);
    for (std::size_t i = 0; i < input_width; ++i)
        binding.sources[i] = {SourceKind::Alfsr, static_cast<std::uint32_t>(i % alfsr_degree)};
    for (std::size_t j = 0; j < cg_bits.size(); ++j) {
        if (cg_bits[j] >= input_width) throw Error("constraint bit outside block input port");
        binding.sources[cg_bits[j]] = {SourceKind::Constraint, static_cast<std::uint32_t>(j)};
    }
    binding.cg = std::move(cg);
    return binding;
}

void validate_binding(const PortBinding& binding, std::size_t input_width, unsigned alfsr_degree) {
    const std::string where = "binding for block '" + binding.block + "'";
    if (binding.sources.size() != input_width)
        throw Error(where + ": " + std::to_string(binding.sources.size()) +
                    " sources for an input port of width " + std::to_string(input_width));
    std::size_t cg_width = 0;
    if (binding.cg) {
        binding.cg->program.validate();
        cg_width = binding.cg->program.port_width;
    }
    std::vector<int> cg_uses(cg_width, 0);
    for (const BitSource& s : binding.sources) {
        if (s.kind == SourceKind::Alfsr) {
            if (s.index >= alfsr_degree)
                throw Error(where + ": ALFSR bit " + std::to_string(s.index) + " out of range");
        } else {
            if (!binding.cg) throw Error(where + ": constraint source without a constraint generator");
            if (s.index >= cg_width)
                throw Error(where + ": constraint bit " + std::to_string(s.index) + " out of range");
            ++cg_uses[s.index];
        }
    }
    for (std::size_t j = 0; j < cg_width; ++j)
        if (cg_uses[j] != 1)
            throw Error(where + ": constraint bit " + std::to_string(j) + " drives " +
                        std::to_string(cg_uses[j]) + " inputs (expected 1)");
}

Situation classify_situation(const PortBinding& binding, unsigned alfsr_degree) {
    const auto alfsr_bits = static_cast<std::size_t>(
        std::count_if(binding.sources.begin(), binding.sources.end(),
                      [](const BitSource& s) { return s.kind == SourceKind::Alfsr; }));
    const bool constrained = binding.cg.has_value();
    const bool replicated = alfsr_bits > alfsr_degree;
    if (constrained) return replicated ? Situation::D : Situation::C;
    return replicated ? Situation::B : Situation::A;
}

Bits assemble_pattern(const PortBinding& binding, const AlfsrState& alfsr, std::uint64_t cycle) {
    Bits cg_value;
    if (binding.cg) cg_value = cg_step(binding.cg->program, cycle);
    Bits pattern(binding.sources.size(), 0);
    for (std::size_t i = 0; i < binding.sources.size(); ++i) {
        const BitSource& s = binding.sources[i];
        if (s.kind == SourceKind::Alfsr) {
            if (s.index >= alfsr.polynomial.degree()) throw Error("binding/width mismatch");
            pattern[i] = (alfsr.reg >> s.index) & 1U;
        } else {
            if (s.index >= cg_value.size()) throw Error("binding/width mismatch");
            pattern[i] = cg_value[s.index];
        }
    }
    return pattern;
}

}  // namespace corebist
