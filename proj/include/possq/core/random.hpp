#pragma once

#include <cstdint>
#include <random>

namespace possq {

using RandomStream = std::mt19937_64;

/// Independent stream `stream` derived from `seed`. Each (seed, stream) pair
/// yields a distinct, reproducible engine state.
inline RandomStream make_stream(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return RandomStream(seq);
}

/// Uniform draw in (0, 1].
template <class Rng>
double uniform_open_closed(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  // generate_canonical may round up to exactly 1.
  while (u >= 1.0) u = unit(rng);
  return 1.0 - u;
}

}  // namespace possq
