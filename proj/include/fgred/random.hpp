#pragma once

// Seeded random streams. Every consumer takes an explicit seed; substreams are
// derived from a root seed with splitmix64 so results never depend on the
// order in which workers pick up jobs.

#include <cstdint>
#include <random>

#include "fgred/gauss.hpp"

namespace fgred {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for substream `stream` (a purpose tag) and item `index` under `root`.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(root) ^ stream) ^ index);
}

inline Vector standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

/// Draw from N(mean, info^-1) using the Cholesky factor L of info:
/// x = mean + L^-T w has covariance (L L^T)^-1.
inline Vector sample_information_form(const GaussianBelief& belief, Rng& rng) {
  const Vector w = standard_normal(belief.dim(), rng);
  const auto tri = belief.factor().lower().triangularView<Eigen::Lower>();
  return belief.mean() + Vector(tri.transpose().solve(w));
}

}  // namespace fgred
