#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mixvi/math.hpp"
#include "mixvi/rng.hpp"

namespace oracles {

double cofactor_determinant(const Matrix &m) {
  const Index n = m.rows();
  if (n == 1) return m(0, 0);
  double det = 0.0;
  double sign = 1.0;
  for (Index j = 0; j < n; ++j) {
    Matrix minor(n - 1, n - 1);
    for (Index r = 1; r < n; ++r) {
      Index cc = 0;
      for (Index c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    det += sign * m(0, j) * cofactor_determinant(minor);
    sign = -sign;
  }
  return det;
}

std::pair<std::vector<Index>, double> brute_force_assignment(
    const Matrix &cost) {
  const Index n = cost.rows();
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Index> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (Index i = 0; i < n; ++i) c += cost(i, perm[i]);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_cost};
}

namespace {

double simpson(const std::function<double(double)> &f, double a, double fa,
               double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)> &f, double a, double fa,
                double b, double fb, double m, double fm, double whole,
                double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, lm, flm);
  const double right = simpson(f, m, fm, b, fb, rm, frm);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)> &f, double a, double b,
                 double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  return adaptive(f, a, fa, b, fb, m, fm, simpson(f, a, fa, b, fb, m, fm),
                  tol, depth);
}

mixvi::VariationalParameters naive_update_global(
    const mixvi::MixedDataset &data, const mixvi::PriorHyperparameters &priors,
    const Matrix &resp) {
  const Index n = data.n(), q = data.q(), p = data.p();
  const Index k = priors.k;
  mixvi::VariationalParameters vp;
  vp.alpha_hat.resize(k);
  vp.beta_hat.resize(k);
  vp.nu_hat.resize(k);
  vp.m_hat.resize(k);
  vp.phi_hat.resize(k);

  for (Index kk = 0; kk < k; ++kk) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += resp(i, kk);
    vp.alpha_hat[kk] = priors.alpha + s;
    vp.beta_hat[kk] = priors.beta + s;
    vp.nu_hat[kk] = priors.nu + s;

    Vector weighted = priors.beta * priors.m[kk];
    for (Index i = 0; i < n; ++i)
      weighted += resp(i, kk) * data.x.row(i).transpose();
    vp.m_hat[kk] = weighted / vp.beta_hat[kk];

    Matrix phi = priors.phi;
    phi -= vp.beta_hat[kk] * vp.m_hat[kk] * vp.m_hat[kk].transpose();
    phi += priors.beta * priors.m[kk] * priors.m[kk].transpose();
    for (Index i = 0; i < n; ++i) {
      const Vector xi = data.x.row(i).transpose();
      phi += resp(i, kk) * xi * xi.transpose();
    }
    vp.phi_hat[kk] = 0.5 * (phi + phi.transpose());
  }

  vp.eta_hat.resize(p);
  for (Index j = 0; j < p; ++j) {
    Matrix eta(k, data.cards[j]);
    for (Index kk = 0; kk < k; ++kk)
      for (Index g = 0; g < data.cards[j]; ++g) {
        double count = 0.0;
        for (Index i = 0; i < n; ++i)
          if (data.c(i, j) == g + 1) count += resp(i, kk);
        eta(kk, g) = priors.eta[j] + count;
      }
    vp.eta_hat[j] = std::move(eta);
  }
  vp.resp = resp;
  return vp;
}

Matrix naive_update_local(const mixvi::MixedDataset &data,
                          const mixvi::VariationalParameters &vp,
                          const mixvi::PriorHyperparameters &priors) {
  (void)priors;
  const Index n = data.n(), q = data.q(), p = data.p(), k = vp.k();
  using mixvi::math::digamma;

  double alpha_total = 0.0;
  for (Index kk = 0; kk < k; ++kk) alpha_total += vp.alpha_hat[kk];

  Matrix rho(n, k);
  for (Index kk = 0; kk < k; ++kk) {
    const Matrix phi_inv = vp.phi_hat[kk].inverse();
    double elogdet = q * std::numbers::ln2 -
                     std::log(vp.phi_hat[kk].determinant());
    for (Index d = 1; d <= q; ++d)
      elogdet += digamma(0.5 * (vp.nu_hat[kk] + 1.0 - d));
    const double elogpi = digamma(vp.alpha_hat[kk]) - digamma(alpha_total);

    for (Index i = 0; i < n; ++i) {
      const Vector diff = data.x.row(i).transpose() - vp.m_hat[kk];
      double elogn = -0.5 * q * std::log(2.0 * std::numbers::pi) +
                     0.5 * elogdet -
                     0.5 * (vp.nu_hat[kk] * diff.dot(phi_inv * diff) +
                            q / vp.beta_hat[kk]);
      double elogpsi = 0.0;
      for (Index j = 0; j < p; ++j) {
        const Index g = data.c(i, j) - 1;
        double row_total = 0.0;
        for (Index gg = 0; gg < data.cards[j]; ++gg)
          row_total += vp.eta_hat[j](kk, gg);
        elogpsi += digamma(vp.eta_hat[j](kk, g)) - digamma(row_total);
      }
      rho(i, kk) = std::exp(elogn + elogpsi + elogpi);
    }
  }
  Matrix resp(n, k);
  for (Index i = 0; i < n; ++i) resp.row(i) = rho.row(i) / rho.row(i).sum();
  return resp;
}

mixvi::MixedDataset random_instance(Index n, Index q, Index p,
                                    std::uint64_t seed) {
  mixvi::Rng rng(seed, "instance", 0);
  mixvi::MixedDataset data;
  data.x.resize(n, q);
  data.c.resize(n, p);
  data.cards.assign(p, 0);
  for (Index j = 0; j < p; ++j)
    data.cards[j] = 2 + static_cast<int>(rng.uniform_int(3));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < q; ++j) data.x(i, j) = 3.0 * rng.normal();
    for (Index j = 0; j < p; ++j)
      data.c(i, j) = 1 + static_cast<int>(rng.uniform_int(data.cards[j]));
  }
  return data;
}

}  // namespace oracles
