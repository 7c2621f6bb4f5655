#include "mixvi/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mixvi::math {

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw std::domain_error("digamma: argument must be positive, got " +
                            std::to_string(x));
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double u = 1.0 / (x * x);
  // asymptotic series, truncation error below 1e-11 at x = 6
  const double series =
      u * (1.0 / 12.0 -
           u * (1.0 / 120.0 -
                u * (1.0 / 252.0 - u * (1.0 / 240.0 - u * (1.0 / 132.0)))));
  return result + std::log(x) - 0.5 / x - series;
}

double log_multigamma(int q, double a) {
  if (q < 1) throw std::domain_error("log_multigamma: q must be >= 1");
  if (!(a > 0.5 * (q - 1)))
    throw std::domain_error("log_multigamma: need a > (q-1)/2, got a = " +
                            std::to_string(a));
  double result = 0.25 * q * (q - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= q; ++j) result += std::lgamma(a + 0.5 * (1 - j));
  return result;
}

namespace {

// Continued fraction for the incomplete beta function (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3.0e-16;
  constexpr double kFpMin = 1.0e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double reg_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("reg_incomplete_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double reg_incomplete_gamma_lower(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("incomplete gamma: a must be > 0");
  if (x < 0.0) throw std::domain_error("incomplete gamma: x must be >= 0");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // series representation
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // continued fraction for the upper tail
  constexpr double kFpMin = 1.0e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw std::domain_error("student_t_cdf: dof must be > 0");
  if (t == 0.0) return 0.5;
  const double x = dof / (dof + t * t);
  const double p = 0.5 * reg_incomplete_beta(0.5 * dof, 0.5, x);
  return t > 0.0 ? 1.0 - p : p;
}

double beta_cdf(double x, double a, double b) {
  return reg_incomplete_beta(a, b, x);
}

double inverse_gamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  return 1.0 - reg_incomplete_gamma_lower(shape, rate / x);
}

void check_spd(const Matrix &m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("check_spd: matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < i; ++j)
      if (std::fabs(m(i, j) - m(j, i)) > 1e-12 * scale)
        throw std::invalid_argument("check_spd: matrix is not symmetric at (" +
                                    std::to_string(i) + "," +
                                    std::to_string(j) + ")");
  SpdChol chol(m);  // throws NotPositiveDefiniteError on failure
}

SpdChol::SpdChol(const Matrix &m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError(
        "Cholesky factorization failed: matrix is not positive definite");
  lower_ = llt.matrixL();
  logdet_ = 0.0;
  for (Index i = 0; i < lower_.rows(); ++i)
    logdet_ += 2.0 * std::log(lower_(i, i));
}

Matrix SpdChol::inverse() const {
  const Index n = lower_.rows();
  Matrix inv = lower_.triangularView<Eigen::Lower>().solve(
      Matrix::Identity(n, n));
  return lower_.transpose().triangularView<Eigen::Upper>().solve(inv);
}

Vector SpdChol::solve(const Vector &b) const {
  Vector y = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

double SpdChol::quadratic_form(const Vector &v) const {
  const Vector y = lower_.triangularView<Eigen::Lower>().solve(v);
  return y.squaredNorm();
}

SpdLogdetInverse spd_logdet_and_inverse(const Matrix &m) {
  check_spd(m);
  SpdChol chol(m);
  return {chol.logdet(), chol.inverse()};
}

double mvt_logpdf(const Vector &x, double dof, const Vector &loc,
                  const Matrix &scale) {
  const Index q = x.size();
  if (loc.size() != q || scale.rows() != q || scale.cols() != q)
    throw std::invalid_argument("mvt_logpdf: dimension mismatch");
  if (!(dof > 0.0)) throw std::domain_error("mvt_logpdf: dof must be > 0");
  SpdChol chol(scale);
  const double maha = chol.quadratic_form(x - loc);
  const double qd = static_cast<double>(q);
  return std::lgamma(0.5 * (dof + qd)) - std::lgamma(0.5 * dof) -
         0.5 * qd * std::log(dof * std::numbers::pi) - 0.5 * chol.logdet() -
         0.5 * (dof + qd) * std::log1p(maha / dof);
}

AssignmentResult linear_sum_assignment(const Matrix &cost) {
  const Index n = cost.rows();
  if (cost.cols() != n)
    throw std::invalid_argument("linear_sum_assignment: cost must be square");
  if (!cost.allFinite())
    throw std::invalid_argument(
        "linear_sum_assignment: cost has non-finite entries");

  // Shortest augmenting path formulation with potentials (1-based internal
  // indexing, column 0 is the virtual source).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      Index j1 = 0;
      double delta = inf;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentResult result;
  result.permutation.assign(n, -1);
  for (Index j = 1; j <= n; ++j)
    if (p[j] != 0) result.permutation[p[j] - 1] = j - 1;
  for (Index i = 0; i < n; ++i)
    result.total_cost += cost(i, result.permutation[i]);
  return result;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  std::vector<double> exps(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) exps[i] = std::exp(v[i] - m);
  return m + std::log(perm_invariant_sum(exps));
}

double perm_invariant_sum(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double x : sorted) total += x;
  return total;
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double total = 0.0;
    for (double x : v) total += x;
    return total;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

}  // namespace mixvi::math
