#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace acrst {

using Rng = std::mt19937_64;

/// Derives an independent 64-bit seed for a named sub-stream of `master`.
/// The same (master, name) pair always yields the same seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name) noexcept;

/// Convenience: a generator seeded from the named sub-stream.
inline Rng make_rng(std::uint64_t master, std::string_view name) {
  return Rng{derive_seed(master, name)};
}

/// Uniform real in [lo, hi). Implemented directly on the raw generator output
/// so results do not depend on the standard library's distribution code.
double uniform(Rng& rng, double lo = 0.0, double hi = 1.0);

/// Uniform integer in [0, n). `n` must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Standard normal variate (Box-Muller).
double normal(Rng& rng);

/// Poisson variate by inversion; adequate for the small means used here.
int poisson(Rng& rng, double mean);

}  // namespace acrst
