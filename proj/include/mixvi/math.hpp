// Numeric kernels shared by the inference and evaluation code: special
// functions, SPD matrix helpers, the multivariate Student-t log density,
// and a linear sum assignment solver.
//
// Everything here is a pure function of its inputs and thread-safe.
#pragma once

#include <span>
#include <vector>

#include "mixvi/common.hpp"

namespace mixvi::math {

// Digamma function, x > 0. Accurate to better than 1e-10 absolute for
// x >= 1e-3 (recurrence shift to x >= 6 plus asymptotic series).
double digamma(double x);

// ln of the multivariate gamma function Gamma_q(a), defined for a > (q-1)/2.
double log_multigamma(int q, double a);

// Regularized incomplete beta function I_x(a, b).
double reg_incomplete_beta(double a, double b, double x);

// Regularized lower incomplete gamma function P(a, x).
double reg_incomplete_gamma_lower(double a, double x);

double student_t_cdf(double t, double dof);
double beta_cdf(double x, double a, double b);
// CDF of an inverse gamma with given shape and rate (mean rate/(shape-1)).
double inverse_gamma_cdf(double x, double shape, double rate);

struct SpdLogdetInverse {
  double logdet = 0.0;
  Matrix inverse;
};

// Checks symmetry (1e-12 relative) and positive Cholesky pivots; throws
// std::invalid_argument / NotPositiveDefiniteError on violation.
void check_spd(const Matrix &m);

// Log determinant and inverse of an SPD matrix via Cholesky.
SpdLogdetInverse spd_logdet_and_inverse(const Matrix &m);

// Cached Cholesky factorization of an SPD matrix.
class SpdChol {
 public:
  explicit SpdChol(const Matrix &m);

  double logdet() const { return logdet_; }
  const Matrix &lower() const { return lower_; }
  Matrix inverse() const;
  Vector solve(const Vector &b) const;
  // (v)^T M^{-1} (v)
  double quadratic_form(const Vector &v) const;

 private:
  Matrix lower_;
  double logdet_;
};

// Log density of the multivariate Student-t with the given degrees of
// freedom, location and scale matrix.
double mvt_logpdf(const Vector &x, double dof, const Vector &loc,
                  const Matrix &scale);

struct AssignmentResult {
  // permutation[i] is the column assigned to row i
  std::vector<Index> permutation;
  double total_cost = 0.0;
};

// Minimum-cost bijection rows -> columns of a square cost matrix
// (Hungarian algorithm, O(K^3)). Throws on non-square or NaN input.
AssignmentResult linear_sum_assignment(const Matrix &cost);

// log(sum(exp(v))) with max subtraction; -inf for empty input.
double log_sum_exp(std::span<const double> v);

// Sum that depends only on the multiset of addends, not their order
// (values are sorted before accumulation). Used wherever a reduction
// across mixture components must be invariant under component relabeling.
double perm_invariant_sum(std::span<const double> v);

// Fixed-order pairwise (cascade) summation.
double pairwise_sum(std::span<const double> v);

// Locates x with cdf(x) = target in [lo, hi] by bisection; cdf must be
// nondecreasing on the bracket.
template <typename Cdf>
double invert_cdf(Cdf &&cdf, double target, double lo, double hi,
                  int max_iter = 200) {
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace mixvi::math
