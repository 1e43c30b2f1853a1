#include "corebist/compactor.hpp"

#include <cmath>
#include <random>

namespace corebist {

std::uint64_t XorCascade::fold(const Bits& word) const {
    if (word.size() != in_width)
        throw Error("cascade input width " + std::to_string(in_width) + " but word has " +
                    std::to_string(word.size()) + " bits");
    if (out_width == 0 || out_width > 64) throw Error("cascade output width must be 1..64");
    std::uint64_t out = 0;
    for (std::size_t i = 0; i < word.size(); ++i)
        if (word[i]) out ^= std::uint64_t{1} << (i % out_width);
    return out;
}

Bits fold(const XorCascade& cascade, const Bits& word) {
    return bits_from_word(cascade.fold(word), cascade.out_width);
}

MisrState misr_absorb(const MisrState& state, std::uint64_t word) {
    const unsigned k = state.polynomial.degree();
    if (k < 64 && (word >> k) != 0) throw Error("MISR input word wider than " + std::to_string(k));
    return {state.polynomial, lfsr_transition(state.polynomial, state.reg) ^ word};
}

MisrState misr_absorb(const MisrState& state, const Bits& word) {
    if (word.size() != state.polynomial.degree())
        throw Error("MISR width " + std::to_string(state.polynomial.degree()) + " but word has " +
                    std::to_string(word.size()) + " bits");
    return misr_absorb(state, bits_to_word(word));
}

const Signature& select_output(std::span<const Signature> signatures, unsigned sel) {
    if (signatures.size() > 4) throw Error("output selector addresses at most 4 signatures");
    if (sel >= signatures.size())
        throw Error("output select code " + std::to_string(sel) + " out of range (" +
                    std::to_string(signatures.size()) + " signatures)");
    return signatures[sel];
}

namespace {

std::uint64_t signature_of(const Polynomial& poly, const std::vector<std::uint64_t>& stream) {
    MisrState s = make_misr(poly);
    for (std::uint64_t w : stream) s = misr_absorb(s, w);
    return s.reg;
}

}  // namespace

AliasingEstimate aliasing_estimate(const Polynomial& poly, std::uint64_t trials,
                                   std::size_t stream_length, std::uint64_t rng_seed) {
    if (trials < 10000) throw Error("aliasing estimate needs at least 10^4 trials");
    if (stream_length == 0) throw Error("stream length must be positive");
    const std::uint64_t mask = low_mask(poly.degree());
    std::mt19937_64 rng(rng_seed);
    std::vector<std::uint64_t> good(stream_length), bad(stream_length);
    AliasingEstimate est;
    est.trials = trials;
    for (std::uint64_t t = 0; t < trials; ++t) {
        bool any_error = false;
        while (!any_error) {
            for (std::size_t i = 0; i < stream_length; ++i) {
                good[i] = rng() & mask;
                const std::uint64_t e = rng() & mask;
                any_error |= e != 0;
                bad[i] = good[i] ^ e;
            }
        }
        if (signature_of(poly, good) == signature_of(poly, bad)) ++est.aliased;
    }
    est.rate = static_cast<double>(est.aliased) / static_cast<double>(trials);
    est.expected = std::ldexp(1.0, -static_cast<int>(poly.degree()));
    return est;
}

AliasingEstimate single_word_aliasing(const Polynomial& poly, std::uint64_t trials,
                                      std::size_t stream_length, std::uint64_t rng_seed) {
    if (stream_length == 0) throw Error("stream length must be positive");
    const std::uint64_t mask = low_mask(poly.degree());
    std::mt19937_64 rng(rng_seed);
    std::vector<std::uint64_t> good(stream_length);
    AliasingEstimate est;
    est.trials = trials;
    for (std::uint64_t t = 0; t < trials; ++t) {
        for (auto& w : good) w = rng() & mask;
        auto bad = good;
        std::uint64_t e = 0;
        while (e == 0) e = rng() & mask;
        bad[rng() % stream_length] ^= e;
        if (signature_of(poly, good) == signature_of(poly, bad)) ++est.aliased;
    }
    est.rate = static_cast<double>(est.aliased) / static_cast<double>(trials);
    est.expected = 0.0;
    return est;
}

std::uint64_t aliasing_exhaustive(const Polynomial& poly, std::size_t stream_length) {
    const unsigned k = poly.degree();
    if (stream_length == 0 || k * stream_length > 24)
        throw Error("exhaustive aliasing limited to k * length <= 24");
    const std::uint64_t total = std::uint64_t{1} << (k * stream_length);
    std::vector<std::uint64_t> stream(stream_length);
    std::uint64_t aliased = 0;
    // Linear compactor: an error stream aliases iff its own signature from
    // the zero state is zero.
    for (std::uint64_t code = 1; code < total; ++code) {
        for (std::size_t i = 0; i < stream_length; ++i) stream[i] = (code >> (i * k)) & low_mask(k);
        if (signature_of(poly, stream) == 0) ++aliased;
    }
    return aliased;
}

}  // namespace corebist
