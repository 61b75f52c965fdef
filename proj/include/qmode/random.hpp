#pragma once

#include <cstdint>
#include <random>

namespace qmode {

using Rng = std::mt19937_64;

//! Independent generator for (seed, stream, substream); used so that each replicate owns its draws.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

//! Uniform on (0,1), never exactly 0.
inline double uniform01(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace qmode
