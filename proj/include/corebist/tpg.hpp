#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corebist/common.hpp"

namespace corebist {

// Characteristic polynomial x^d + ... + 1 over GF(2). The constant term is
// implicit; taps hold the remaining exponents, highest first, degree included.
class Polynomial {
public:
    static constexpr unsigned kMinDegree = 2;
    static constexpr unsigned kMaxDegree = 64;

    static Polynomial from_taps(std::vector<unsigned> taps);
    // "x^20+x^3+1"; whitespace ignored, "x" means x^1, "+1" is required.
    static Polynomial parse(std::string_view text);

    unsigned degree() const { return taps_.front(); }
    const std::vector<unsigned>& taps() const { return taps_; }
    std::string to_string() const;

    // Register positions XORed into the feedback bit: bit 0 (constant term)
    // plus every tap below the degree.
    std::uint64_t feedback_mask() const { return feedback_mask_; }

    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.taps_ == b.taps_; }

private:
    std::vector<unsigned> taps_;
    std::uint64_t feedback_mask_ = 0;
};

// Built-in primitive polynomial per degree (2..32 and 64).
Polynomial default_polynomial(unsigned degree);

// 20-bit pattern generator polynomial x^20+x^3+1.
Polynomial default_alfsr_polynomial();

// One Fibonacci shift: bit i <- bit i+1, top bit <- parity(reg & feedback).
std::uint64_t lfsr_transition(const Polynomial& poly, std::uint64_t reg);

struct AlfsrState {
    Polynomial polynomial;
    std::uint64_t reg = 1;

    Bits bits() const { return bits_from_word(reg, polynomial.degree()); }
    friend bool operator==(const AlfsrState&, const AlfsrState&) = default;
};

// Validated initial state. Throws on length mismatch or all-zero seed.
AlfsrState seed(const Polynomial& poly, const Bits& seed_bits);
AlfsrState seed(const Polynomial& poly, std::uint64_t value);

AlfsrState alfsr_step(const AlfsrState& state);

struct ScheduleEntry {
    Bits value;
    std::uint64_t hold = 1;
    friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

// Declarative constraint generator: each value is held for `hold` cycles;
// cyclic programs wrap, others keep the last value forever.
struct ConstraintProgram {
    std::size_t port_width = 0;
    std::vector<ScheduleEntry> schedule;
    bool cyclic = false;

    void validate() const;
    std::uint64_t length() const;
    friend bool operator==(const ConstraintProgram&, const ConstraintProgram&) = default;
};

Bits cg_step(const ConstraintProgram& program, std::uint64_t cycle);

enum class SourceKind : std::uint8_t { Alfsr, Constraint };

struct BitSource {
    SourceKind kind = SourceKind::Alfsr;
    std::uint32_t index = 0;  // ALFSR register bit or constraint-port bit
    friend bool operator==(const BitSource&, const BitSource&) = default;
};

struct NamedConstraint {
    std::string name;
    ConstraintProgram program;
    friend bool operator==(const NamedConstraint&, const NamedConstraint&) = default;
};

// How one block's input port is fed: one source per input bit.
struct PortBinding {
    std::string block;
    std::vector<BitSource> sources;
    std::optional<NamedConstraint> cg;
    friend bool operator==(const PortBinding&, const PortBinding&) = default;
};

// Default wiring: block bit cg_bits[j] <- constraint bit j, every other bit
// i <- ALFSR bit (i mod degree).
PortBinding modular_binding(std::string block, std::size_t input_width, unsigned alfsr_degree,
                            std::optional<NamedConstraint> cg = std::nullopt,
                            const std::vector<std::uint32_t>& cg_bits = {});

// Throws when the binding does not fit the block width / generator sizes, or
// a constraint bit is left unused or used twice.
void validate_binding(const PortBinding& binding, std::size_t input_width, unsigned alfsr_degree);

// Port-binding situations: a) fits, b) replicated, c) constrained and fits,
// d) constrained and replicated.
enum class Situation : char { A = 'a', B = 'b', C = 'c', D = 'd' };
Situation classify_situation(const PortBinding& binding, unsigned alfsr_degree);

Bits assemble_pattern(const PortBinding& binding, const AlfsrState& alfsr, std::uint64_t cycle);

}  // namespace corebist
