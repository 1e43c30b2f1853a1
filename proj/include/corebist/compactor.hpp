#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corebist/common.hpp"
#include "corebist/tpg.hpp"

namespace corebist {

// Folds a wide response word onto the MISR width: output bit j is the XOR of
// every input bit i with i mod out_width == j. Output bits with no input
// (out_width > in_width) stay 0.
struct XorCascade {
    std::size_t in_width = 0;
    std::size_t out_width = 0;

    std::uint64_t fold(const Bits& word) const;
};

Bits fold(const XorCascade& cascade, const Bits& word);

struct MisrState {
    Polynomial polynomial;
    std::uint64_t reg = 0;
    friend bool operator==(const MisrState&, const MisrState&) = default;
};

inline MisrState make_misr(const Polynomial& poly) { return {poly, 0}; }

// next = LFSR transition of the register, XOR the word.
MisrState misr_absorb(const MisrState& state, const Bits& word);
MisrState misr_absorb(const MisrState& state, std::uint64_t word);

struct Signature {
    std::string block;
    Polynomial polynomial;
    std::uint64_t value = 0;
    std::uint64_t pattern_count = 0;

    std::string hex() const { return to_hex(value, polynomial.degree()); }
    friend bool operator==(const Signature&, const Signature&) = default;
};

// Output selector: code must address a registered signature (at most four).
const Signature& select_output(std::span<const Signature> signatures, unsigned sel);

struct AliasingEstimate {
    std::uint64_t trials = 0;
    std::uint64_t aliased = 0;
    double rate = 0.0;
    double expected = 0.0;  // 2^-k
};

// Monte-Carlo: random fault-free streams of `stream_length` words, each
// corrupted by a uniformly random non-zero error stream; counts corrupted
// streams whose signature equals the fault-free one.
AliasingEstimate aliasing_estimate(const Polynomial& poly, std::uint64_t trials,
                                   std::size_t stream_length, std::uint64_t rng_seed);

// Same with a single corrupted word per stream (never aliases).
AliasingEstimate single_word_aliasing(const Polynomial& poly, std::uint64_t trials,
                                      std::size_t stream_length, std::uint64_t rng_seed);

// Number of non-zero error streams of the given length that alias, by full
// enumeration (k * length <= 24).
std::uint64_t aliasing_exhaustive(const Polynomial& poly, std::size_t stream_length);

}  // namespace corebist
