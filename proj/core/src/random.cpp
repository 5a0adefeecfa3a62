#include "counterpol/random.hpp"

namespace counterpol {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng action_stream(std::uint64_t episode_seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(episode_seed),
                    static_cast<std::uint32_t>(episode_seed >> 32), 0xac71u};
  return Rng(seq);
}

}  // namespace counterpol
