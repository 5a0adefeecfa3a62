#pragma once

#include <cstdint>
#include <random>

namespace counterpol {

/// Random engine used for every stochastic draw in the library.
using Rng = std::mt19937_64;

/// Mixes a base seed and a stream index into an independent 64-bit seed
/// (splitmix64 finalizer). Used to give each optimization step its own
/// episode seeds without overlapping neighbouring steps.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Engine for the action stream of an episode. Kept separate from the reset
/// stream so that the initial state depends only on the episode seed.
Rng action_stream(std::uint64_t episode_seed);

}  // namespace counterpol
