#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace entnet {

using Rng = std::mt19937_64;

/// Independent generator for one labeled consumer of a run seed
/// ("init", "shuffle", "dropout", "generator", ...). Streams with different
/// labels never share state, so any one of them can be replayed alone.
Rng make_stream(std::uint64_t seed, std::string_view label);

}  // namespace entnet
