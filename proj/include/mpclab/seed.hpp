#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mpclab {

/// SplitMix64 finalizer. Used as the mixing function for every derived seed.
std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a hash of a stream label.
std::uint64_t fnv1a64(std::string_view label);

/// Derive an independent RNG seed from a base seed, a stream label and any
/// number of integer coordinates:
///   h = splitmix64(base ^ fnv1a64(label)); h = splitmix64(h ^ c) for each c.
/// The derivation is part of the reproducibility contract and must not change.
std::uint64_t substream_seed(std::uint64_t base, std::string_view label,
                             std::initializer_list<std::uint64_t> coords = {});

/// Bit pattern of a double, for mixing real-valued cell coordinates.
std::uint64_t double_bits(double v);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::string_view label,
                    std::initializer_list<std::uint64_t> coords = {}) {
    return Rng(substream_seed(base, label, coords));
}

} // namespace mpclab
