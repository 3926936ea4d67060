#ifndef SWARM_RANDOM_HPP
#define SWARM_RANDOM_HPP

#include <cstdint>
#include <random>

namespace swarm {

using Rng = std::mt19937_64;

/// Seeds a generator from a base seed and a stream tag so that independent
/// consumers (site placement, motion, ...) never share a sequence.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// Uniform draw on [0, 1) with 53 random bits. Platform independent, unlike
/// std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace swarm

#endif  // SWARM_RANDOM_HPP
