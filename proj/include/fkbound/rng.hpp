#pragma once

// Counter-based Philox4x32-10: every output block is a pure function of
// (counter, key), so random numbers can be addressed directly by
// (seed, path, level, index) without any sequential state.

#include <array>
#include <cstdint>
#include <utility>

namespace fkbound::rng {

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Block philox4x32_10(Block counter, Key key);

Key key_from_seed(std::uint64_t seed);

/// Two uniforms in (0, 1) on the grid (k + 1/2)·2^-52, from one block.
std::pair<double, double> uniforms(const Block& b);

/// Two independent standard normals (Box–Muller) from one block.
std::pair<double, double> normals(const Block& b);

}  // namespace fkbound::rng
