#include "mpclab/seed.hpp"

#include <bit>

namespace mpclab {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t substream_seed(std::uint64_t base, std::string_view label,
                             std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = splitmix64(base ^ fnv1a64(label));
    for (std::uint64_t c : coords) h = splitmix64(h ^ c);
    return h;
}

std::uint64_t double_bits(double v) {
    // +0.0 and -0.0 name the same grid cell
    if (v == 0.0) v = 0.0;
    return std::bit_cast<std::uint64_t>(v);
}

} // namespace mpclab
