#pragma once

#include <cstdint>
#include <random>

namespace hifloc {

// Distributions in <random> are implementation-defined, so draws are built
// directly from the engine's bits to keep results identical across toolchains.
using Engine = std::mt19937_64;

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& engine)
{
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Uniform integer on [0, bound), bound > 0, by rejection.
inline std::uint64_t uniform_below(Engine& engine, std::uint64_t bound)
{
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = engine();
    while (draw >= limit)
        draw = engine();
    return draw % bound;
}

} // namespace hifloc
