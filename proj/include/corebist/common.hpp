#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace corebist {

// Base for every error raised by the library. CLI maps Error to exit code 1
// (validation) unless it is a RuntimeError.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RuntimeError : public Error {
public:
    using Error::Error;
};

// One bit per element, values 0/1. Index 0 is the LSB.
using Bits = std::vector<std::uint8_t>;

// Parses a binary string written MSB-left ("1010" -> bit0=0, bit3=1).
// Underscores are ignored.
Bits bits_from_string(std::string_view text);

// Inverse of bits_from_string.
std::string bits_to_string(const Bits& bits);

// Low `width` bits of `value` as a Bits vector.
Bits bits_from_word(std::uint64_t value, std::size_t width);

// Packs up to 64 bits into a word. Throws when bits.size() > 64.
std::uint64_t bits_to_word(const Bits& bits);

// Lower-case hex with 0x prefix, zero-padded to ceil(width/4) digits.
std::string to_hex(std::uint64_t value, std::size_t width);

// Accepts "0x..." hex or plain decimal.
std::uint64_t parse_uint(std::string_view text);

inline std::uint64_t low_mask(std::size_t width) {
    return width >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
}

}  // namespace corebist
