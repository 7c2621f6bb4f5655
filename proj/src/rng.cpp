#include "mixvi/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mixvi {

namespace {

std::uint64_t splitmix64(std::uint64_t &x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_name(std::string_view name) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t mix = seed;
  std::uint64_t a = splitmix64(mix);
  mix ^= 0x6a09e667f3bcc909ULL + stream + (stream << 17);
  reseed(a ^ splitmix64(mix));
}

Rng::Rng(std::uint64_t seed, std::string_view name, std::uint64_t stream)
    : Rng(seed ^ hash_name(name), stream) {}

void Rng::reseed(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto &s : state_) s = splitmix64(x);
  have_cached_normal_ = false;
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
  // rejection to remove modulo bias
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  // Marsaglia polar method
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * f;
  have_cached_normal_ = true;
  return u * f;
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
  if (shape < 1.0) {
    // boost to shape+1 and scale back
    const double u = uniform01();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v;
  }
}

double Rng::gamma(double shape, double scale) { return gamma(shape) * scale; }

double Rng::chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

Vector Rng::dirichlet(const Vector &concentration) {
  Vector draw(concentration.size());
  double total = 0.0;
  for (Index i = 0; i < concentration.size(); ++i) {
    draw[i] = gamma(concentration[i]);
    total += draw[i];
  }
  if (total <= 0.0)
    throw std::runtime_error("dirichlet: all gamma draws underflowed");
  return draw / total;
}

Index Rng::categorical(const Vector &weights) {
  const double total = weights.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::invalid_argument("categorical: weights must have positive sum");
  double u = uniform01() * total;
  for (Index k = 0; k < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0.0) return k;
  }
  return weights.size() - 1;
}

Vector Rng::mv_normal(const Vector &mean, const Matrix &chol_lower) {
  Vector z(mean.size());
  for (Index i = 0; i < z.size(); ++i) z[i] = normal();
  return mean + chol_lower * z;
}

Matrix Rng::wishart(double dof, const Matrix &scale_chol_lower) {
  const Index q = scale_chol_lower.rows();
  if (!(dof > static_cast<double>(q) - 1.0))
    throw std::invalid_argument("wishart: dof must exceed dim - 1");
  Matrix a = Matrix::Zero(q, q);
  for (Index i = 0; i < q; ++i) {
    a(i, i) = std::sqrt(chi_squared(dof - static_cast<double>(i)));
    for (Index j = 0; j < i; ++j) a(i, j) = normal();
  }
  const Matrix la = scale_chol_lower * a;
  return la * la.transpose();
}

}  // namespace mixvi
