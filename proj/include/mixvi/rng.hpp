// Deterministic random number generation.
//
// All stochastic code in the library draws from Rng so that results are
// reproducible bit-for-bit across runs and platforms for a fixed seed.
// Streams are derived from (seed, stream id) pairs, so concurrent chains
// or replicates stay reproducible independently of scheduling.
#pragma once

#include <cstdint>
#include <string_view>

#include "mixvi/common.hpp"

namespace mixvi {

// xoshiro256++ seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }
  Rng(std::uint64_t seed, std::uint64_t stream);
  // Named stream, e.g. Rng(seed, "chain", 3).
  Rng(std::uint64_t seed, std::string_view name, std::uint64_t stream);

  void reseed(std::uint64_t seed);
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  // Uniform integer on {0, ..., n-1}.
  std::uint64_t uniform_int(std::uint64_t n);

  double normal();                       // standard normal (polar method)
  double gamma(double shape);            // unit scale, shape > 0
  double gamma(double shape, double scale);
  double chi_squared(double dof);
  Vector dirichlet(const Vector &concentration);
  // Index in {0, ..., K-1} with the given (not necessarily normalized) weights.
  Index categorical(const Vector &weights);

  Vector mv_normal(const Vector &mean, const Matrix &chol_lower);
  // Wishart draw with given dof and the lower Cholesky factor of the scale
  // matrix, via the Bartlett decomposition.
  Matrix wishart(double dof, const Matrix &scale_chol_lower);

 private:
  std::uint64_t state_[4];
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace mixvi
