#include "corebist/common.hpp"

#include <charconv>

namespace corebist {

Bits bits_from_string(std::string_view text) {
    Bits bits;
    bits.reserve(text.size());
    for (auto it = text.rbegin(); it != text.rend(); ++it) {
        if (*it == '_') continue;
        if (*it != '0' && *it != '1')
            throw Error("invalid bit character '" + std::string(1, *it) + "' in \"" +
                        std::string(text) + "\"");
        bits.push_back(*it == '1' ? 1 : 0);
    }
    return bits;
}

std::string bits_to_string(const Bits& bits) {
    std::string out(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) out[bits.size() - 1 - i] = '1';
    return out;
}

Bits bits_from_word(std::uint64_t value, std::size_t width) {
    Bits bits(width, 0);
    for (std::size_t i = 0; i < width && i < 64; ++i) bits[i] = (value >> i) & 1U;
    return bits;
}

std::uint64_t bits_to_word(const Bits& bits) {
    if (bits.size() > 64) throw Error("bit vector wider than 64 bits");
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) word |= std::uint64_t{1} << i;
    return word;
}

std::string to_hex(std::uint64_t value, std::size_t width) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::size_t digits = width == 0 ? 1 : (width + 3) / 4;
    std::string out(digits, '0');
    for (std::size_t i = 0; i < digits && i < 16; ++i)
        out[digits - 1 - i] = kDigits[(value >> (4 * i)) & 0xF];
    return "0x" + out;
}

std::uint64_t parse_uint(std::string_view text) {
    int base = 10;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        text.remove_prefix(2);
        base = 16;
    }
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw Error("invalid unsigned integer \"" + std::string(text) + "\"");
    return value;
}

}  // namespace corebist
