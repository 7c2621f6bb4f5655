#include "mixvi/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "mixvi/math.hpp"
#include "mixvi/predictive.hpp"

namespace mixvi::eval {

namespace {

using math::SpdChol;

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index) {
  return Rng(seed, tag, index).next_u64();
}

}  // namespace

MatchedFit match_components(const std::vector<Vector> &fitted_means,
                            const std::vector<Vector> &truth_means) {
  const Index kf = static_cast<Index>(fitted_means.size());
  const Index kt = static_cast<Index>(truth_means.size());
  if (kf < kt)
    throw std::invalid_argument(
        "match_components: fewer fitted components than truth components");

  // rectangular problem padded with zero-cost dummy truth rows
  Matrix cost = Matrix::Zero(kf, kf);
  for (Index t = 0; t < kt; ++t)
    for (Index f = 0; f < kf; ++f)
      cost(t, f) = (fitted_means[f] - truth_means[t]).squaredNorm();
  const auto assignment = math::linear_sum_assignment(cost);

  MatchedFit matched;
  matched.fitted_for_truth.assign(assignment.permutation.begin(),
                                  assignment.permutation.begin() + kt);
  for (Index t = 0; t < kt; ++t)
    matched.total_cost += cost(t, matched.fitted_for_truth[t]);
  return matched;
}

PointEstimates posterior_means(const VariationalParameters &vp) {
  const Index k = vp.k();
  const Index q = vp.m_hat.empty() ? 0 : vp.m_hat.front().size();
  PointEstimates est;
  est.pi = vp.alpha_hat / math::perm_invariant_sum(
                              {vp.alpha_hat.data(),
                               static_cast<std::size_t>(k)});
  est.mu = vp.m_hat;
  est.sigma.resize(k);
  for (Index kk = 0; kk < k; ++kk) {
    const double denom = vp.nu_hat[kk] - q - 1.0;
    if (!(denom > 0.0))
      throw std::domain_error(
          "posterior_means: nu_hat <= q + 1, inverse-Wishart mean undefined");
    est.sigma[kk] = vp.phi_hat[kk] / denom;
  }
  est.psi.reserve(vp.eta_hat.size());
  for (const auto &eta : vp.eta_hat) {
    Matrix rows = eta;
    for (Index kk = 0; kk < rows.rows(); ++kk) rows.row(kk) /= eta.row(kk).sum();
    est.psi.push_back(std::move(rows));
  }
  return est;
}

PointEstimates posterior_means(const ChainSummary &chain) {
  PointEstimates est;
  est.pi = chain.mean_pi;
  est.mu = chain.mean_mu;
  est.sigma = chain.mean_sigma;
  est.psi = chain.mean_psi;
  return est;
}

MetricsRecord param_errors(const MatchedFit &matched, const GroundTruth &truth,
                           const PointEstimates &estimates) {
  const Index kt = matched.truth_k();
  const Index q = truth.q();
  const Index p = truth.p();

  MetricsRecord rec;
  double total_cards = 0.0;
  for (Index j = 0; j < p; ++j) total_cards += truth.cards[j];

  for (Index t = 0; t < kt; ++t) {
    const Index f = matched.fitted_for_truth[t];
    rec.error_mu += (truth.mu[t] - estimates.mu[f]).cwiseAbs().sum();
    rec.error_sigma +=
        (truth.sigma[t] - estimates.sigma[f]).cwiseAbs().sum();
    rec.error_pi += std::fabs(truth.pi[t] - estimates.pi[f]);
    for (Index j = 0; j < p; ++j)
      rec.error_psi += (truth.psi[j].row(t) - estimates.psi[j].row(f))
                           .cwiseAbs()
                           .sum();
  }
  rec.error_mu /= static_cast<double>(q * kt);
  rec.error_sigma /= static_cast<double>(q * q * kt);
  rec.error_pi /= static_cast<double>(kt);
  if (total_cards > 0.0) rec.error_psi /= total_cards * kt;
  return rec;
}

std::vector<int> relabel_to_truth(const std::vector<int> &fitted_labels,
                                  const MatchedFit &matched, Index fitted_k) {
  std::vector<int> truth_of_fitted(fitted_k, 0);
  for (Index t = 0; t < matched.truth_k(); ++t)
    truth_of_fitted[matched.fitted_for_truth[t]] = static_cast<int>(t) + 1;
  std::vector<int> out(fitted_labels.size());
  for (std::size_t i = 0; i < fitted_labels.size(); ++i)
    out[i] = truth_of_fitted[fitted_labels[i] - 1];
  return out;
}

double prop_z(const std::vector<int> &labels, const std::vector<int> &z_star) {
  if (labels.size() != z_star.size())
    throw std::invalid_argument("prop_z: label vectors differ in length");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == z_star[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double error_logppd(const MixedDataset &test_data, const GroundTruth &truth,
                    const VariationalParameters &vp) {
  const MixtureDensity density(truth);
  double total = 0.0;
  for (Index i = 0; i < test_data.n(); ++i) {
    const Vector xi = test_data.x.row(i).transpose();
    const double truth_ll = density.logpdf(xi, test_data.c.row(i));
    const double model_ll = log_ppd(xi, test_data.c.row(i), vp,
                                    test_data.cards);
    total += std::fabs(truth_ll - model_ll);
  }
  return total / static_cast<double>(test_data.n());
}

// ---------------------------------------------------------------------------
// HDI machinery

namespace {

struct ScalarDensity {
  std::function<double(double)> pdf;
  std::function<double(double)> cdf;
  double mode = 0.0;
  double box_lo = 0.0;   // finite search bounds holding ~all the mass
  double box_hi = 0.0;
  int monotone = 0;      // -1 decreasing, +1 increasing, 0 interior mode
};

double solve_pdf_level(const ScalarDensity &d, double level, double lo,
                       double hi, bool increasing) {
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool below = d.pdf(mid) < level;
    if (below == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Interval hdi_generic(const ScalarDensity &d, double mass) {
  if (!(mass > 0.0) || !(mass < 1.0))
    throw std::invalid_argument("hdi: mass must be in (0, 1)");

  if (d.monotone != 0) {
    // one-sided interval at the support edge
    if (d.monotone < 0)
      return {d.box_lo,
              math::invert_cdf(d.cdf, mass, d.box_lo, d.box_hi)};
    return {math::invert_cdf(d.cdf, 1.0 - mass, d.box_lo, d.box_hi),
            d.box_hi};
  }

  double level_lo = std::max(d.pdf(d.box_lo), d.pdf(d.box_hi));
  double level_hi = d.pdf(d.mode);
  Interval best{d.box_lo, d.box_hi};
  for (int it = 0; it < 100; ++it) {
    const double level = 0.5 * (level_lo + level_hi);
    const double a = solve_pdf_level(d, level, d.box_lo, d.mode, true);
    const double b = solve_pdf_level(d, level, d.mode, d.box_hi, false);
    const double m = d.cdf(b) - d.cdf(a);
    best = {a, b};
    if (m > mass)
      level_lo = level;   // interval too wide, raise the level
    else
      level_hi = level;
  }
  return best;
}

// Expands a bracket away from `center` until cdf crosses the target tails.
std::pair<double, double> quantile_box(
    const std::function<double(double)> &cdf, double center, double step,
    double lo_limit, double hi_limit) {
  double lo = center - step;
  while (lo > lo_limit && cdf(lo) > 1e-13) {
    step *= 2.0;
    lo = center - step;
  }
  lo = std::max(lo, lo_limit);
  step = std::fabs(step);
  double hi = center + step;
  while (hi < hi_limit && cdf(hi) < 1.0 - 1e-13) {
    step *= 2.0;
    hi = center + step;
  }
  hi = std::min(hi, hi_limit);
  return {lo, hi};
}

}  // namespace

Interval hdi_beta(double a, double b, double mass) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("hdi_beta: parameters must be positive");
  ScalarDensity d;
  d.pdf = [a, b](double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x));
  };
  d.cdf = [a, b](double x) { return math::beta_cdf(x, a, b); };
  d.box_lo = 0.0;
  d.box_hi = 1.0;
  if (a > 1.0 && b > 1.0) {
    d.mode = (a - 1.0) / (a + b - 2.0);
  } else if (a <= 1.0 && b > 1.0) {
    d.monotone = -1;
  } else if (a > 1.0 && b <= 1.0) {
    d.monotone = +1;
  } else {
    // flat or bathtub-shaped: fall back to the central interval
    const double tail = 0.5 * (1.0 - mass);
    return {math::invert_cdf(d.cdf, tail, 0.0, 1.0),
            math::invert_cdf(d.cdf, 1.0 - tail, 0.0, 1.0)};
  }
  return hdi_generic(d, mass);
}

Interval hdi_student_t(double dof, double loc, double scale, double mass) {
  if (!(dof > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("hdi_student_t: dof and scale must be positive");
  const double sd = std::sqrt(scale);
  ScalarDensity d;
  d.pdf = [dof, loc, sd](double x) {
    const double u = (x - loc) / sd;
    return std::exp(std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                    0.5 * std::log(dof * std::numbers::pi) - std::log(sd) -
                    0.5 * (dof + 1.0) * std::log1p(u * u / dof));
  };
  d.cdf = [dof, loc, sd](double x) {
    return math::student_t_cdf((x - loc) / sd, dof);
  };
  d.mode = loc;
  const double inf = std::numeric_limits<double>::infinity();
  std::tie(d.box_lo, d.box_hi) = quantile_box(d.cdf, loc, sd, -inf, inf);
  return hdi_generic(d, mass);
}

Interval hdi_inverse_gamma(double shape, double rate, double mass) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("hdi_inverse_gamma: parameters must be positive");
  ScalarDensity d;
  d.pdf = [shape, rate](double x) {
    if (x <= 0.0) return 0.0;
    return std::exp(shape * std::log(rate) - std::lgamma(shape) -
                    (shape + 1.0) * std::log(x) - rate / x);
  };
  d.cdf = [shape, rate](double x) {
    return math::inverse_gamma_cdf(x, shape, rate);
  };
  d.mode = rate / (shape + 1.0);
  double lo = d.mode;
  while (d.cdf(lo) > 1e-13) lo *= 0.5;
  double hi = d.mode;
  while (d.cdf(hi) < 1.0 - 1e-13) hi *= 2.0;
  d.box_lo = lo;
  d.box_hi = hi;
  return hdi_generic(d, mass);
}

Interval hdi_from_samples(std::vector<double> samples, double mass) {
  if (samples.size() < 2)
    throw std::invalid_argument("hdi_from_samples: need at least 2 samples");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  std::size_t window = static_cast<std::size_t>(
      std::ceil(mass * static_cast<double>(n)));
  window = std::clamp<std::size_t>(window, 2, n);
  std::size_t best = 0;
  double best_width = samples[window - 1] - samples[0];
  for (std::size_t i = 1; i + window <= n; ++i) {
    const double width = samples[i + window - 1] - samples[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {samples[best], samples[best + window - 1]};
}

// ---------------------------------------------------------------------------
// Joint HDI

namespace {

double log_wishart_pdf(const Matrix &lambda, double nu, const Matrix &phi,
                       double logdet_phi, double lgq) {
  const Index q = lambda.rows();
  const SpdChol chol(lambda);
  return 0.5 * (nu - q - 1.0) * chol.logdet() -
         0.5 * (phi * lambda).trace() - 0.5 * nu * q * std::numbers::ln2 +
         0.5 * nu * logdet_phi - lgq;
}

double log_dirichlet_pdf(const Vector &x, const Vector &conc) {
  double lp = std::lgamma(conc.sum());
  for (Index i = 0; i < x.size(); ++i)
    lp += (conc[i] - 1.0) * std::log(x[i]) - std::lgamma(conc[i]);
  return lp;
}

// log q(pi, mu, Lambda, psi) of the variational posterior, precision
// parameterization.
double vi_log_density(const VariationalParameters &vp, const Vector &pi,
                      const std::vector<Vector> &mu,
                      const std::vector<Matrix> &lambda,
                      const std::vector<Matrix> &psi,
                      const std::vector<double> &logdet_phi,
                      const std::vector<double> &lgq) {
  const Index k = vp.k();
  const Index q = mu.front().size();
  double total = log_dirichlet_pdf(pi, vp.alpha_hat);
  for (Index kk = 0; kk < k; ++kk) {
    const SpdChol chol_lambda(lambda[kk]);
    const Vector dm = mu[kk] - vp.m_hat[kk];
    total += -0.5 * q * std::log(2.0 * std::numbers::pi) +
             0.5 * q * std::log(vp.beta_hat[kk]) + 0.5 * chol_lambda.logdet() -
             0.5 * vp.beta_hat[kk] * dm.dot(lambda[kk] * dm);
    total += log_wishart_pdf(lambda[kk], vp.nu_hat[kk], vp.phi_hat[kk],
                             logdet_phi[kk], lgq[kk]);
  }
  for (std::size_t j = 0; j < psi.size(); ++j)
    for (Index kk = 0; kk < k; ++kk)
      total += log_dirichlet_pdf(psi[j].row(kk).transpose(),
                                 vp.eta_hat[j].row(kk).transpose());
  return total;
}

}  // namespace

bool joint_hdi_covers_vi(const VariationalParameters &vp,
                         const GroundTruth &truth_in_fitted_order, double mass,
                         int samples, std::uint64_t seed) {
  if (samples < 1000)
    throw std::invalid_argument(
        "joint_hdi_covers_vi: need at least 1000 samples");
  const Index k = vp.k();
  if (truth_in_fitted_order.k() != k)
    throw std::invalid_argument(
        "joint_hdi_covers_vi: component count mismatch");
  const Index q = vp.m_hat.front().size();
  const Index p = static_cast<Index>(vp.eta_hat.size());

  std::vector<double> logdet_phi(k), lgq(k);
  std::vector<Matrix> phi_inv_chol(k);
  for (Index kk = 0; kk < k; ++kk) {
    const SpdChol chol(vp.phi_hat[kk]);
    logdet_phi[kk] = chol.logdet();
    lgq[kk] =
        math::log_multigamma(static_cast<int>(q), 0.5 * vp.nu_hat[kk]);
    phi_inv_chol[kk] = SpdChol(chol.inverse()).lower();
  }

  Rng rng(seed, "joint_hdi", 0);
  std::vector<double> log_density(samples);
  std::vector<Vector> mu(k);
  std::vector<Matrix> lambda(k);
  std::vector<Matrix> psi(p);
  for (int s = 0; s < samples; ++s) {
    const Vector pi = rng.dirichlet(vp.alpha_hat);
    for (Index kk = 0; kk < k; ++kk) {
      lambda[kk] = rng.wishart(vp.nu_hat[kk], phi_inv_chol[kk]);
      // mu | Lambda ~ N(m_hat, (beta_hat Lambda)^{-1})
      const Matrix cov =
          SpdChol(vp.beta_hat[kk] * lambda[kk]).inverse();
      mu[kk] = rng.mv_normal(vp.m_hat[kk], SpdChol(cov).lower());
    }
    for (Index j = 0; j < p; ++j) {
      psi[j].resize(k, vp.eta_hat[j].cols());
      for (Index kk = 0; kk < k; ++kk)
        psi[j].row(kk) =
            rng.dirichlet(vp.eta_hat[j].row(kk).transpose()).transpose();
    }
    log_density[s] =
        vi_log_density(vp, pi, mu, lambda, psi, logdet_phi, lgq);
  }

  std::vector<Matrix> truth_lambda(k);
  for (Index kk = 0; kk < k; ++kk)
    truth_lambda[kk] = SpdChol(truth_in_fitted_order.sigma[kk]).inverse();
  const double truth_ld =
      vi_log_density(vp, truth_in_fitted_order.pi, truth_in_fitted_order.mu,
                     truth_lambda, truth_in_fitted_order.psi, logdet_phi, lgq);

  std::sort(log_density.begin(), log_density.end());
  const auto idx = static_cast<std::size_t>(
      std::floor((1.0 - mass) * static_cast<double>(samples)));
  return truth_ld >= log_density[std::min(idx, log_density.size() - 1)];
}

bool joint_hdi_covers_gibbs(const std::vector<double> &sample_log_joint,
                            double truth_log_joint, double mass) {
  if (sample_log_joint.size() < 2)
    throw std::invalid_argument("joint_hdi_covers_gibbs: no samples");
  std::vector<double> sorted = sample_log_joint;
  std::sort(sorted.begin(), sorted.end());
  const auto idx = static_cast<std::size_t>(
      std::floor((1.0 - mass) * static_cast<double>(sorted.size())));
  return truth_log_joint >= sorted[std::min(idx, sorted.size() - 1)];
}

// ---------------------------------------------------------------------------
// Metric pipelines

namespace {

MixedDataset standardized_test_set(const GroundTruth &truth,
                                   const StandardizationTransform &transform,
                                   Index n_train, std::uint64_t test_seed) {
  const Index n_test = std::min<Index>(
      static_cast<Index>(0.4 * static_cast<double>(n_train)), 2000);
  auto [test, z] = sim::sample_dataset(truth, std::max<Index>(n_test, 1),
                                       test_seed);
  test.x = apply_transform(test.x, transform);
  return std::move(test);
}

}  // namespace

MetricsRecord evaluate_vi(const VariationalParameters &vp,
                          const GroundTruth &truth,
                          const StandardizationTransform &transform,
                          const std::vector<int> &z_star, Index n_train,
                          std::uint64_t test_seed) {
  const GroundTruth truth_std = transform_truth(truth, transform);
  const MatchedFit matched = match_components(vp.m_hat, truth_std.mu);

  MetricsRecord rec = param_errors(matched, truth_std, posterior_means(vp));
  const auto labels =
      relabel_to_truth(hard_assign(vp), matched, vp.k());
  rec.prop_z = prop_z(labels, z_star);

  const MixedDataset test =
      standardized_test_set(truth, transform, n_train, test_seed);
  rec.error_logppd = error_logppd(test, truth_std, vp);
  return rec;
}

MetricsRecord evaluate_gibbs(const ChainSummary &chain,
                             const GroundTruth &truth,
                             const StandardizationTransform &transform,
                             const std::vector<int> &z_star) {
  const GroundTruth truth_std = transform_truth(truth, transform);
  const MatchedFit matched = match_components(chain.mean_mu, truth_std.mu);

  MetricsRecord rec =
      param_errors(matched, truth_std, posterior_means(chain));
  const auto labels = relabel_to_truth(
      chain.last_z, matched, static_cast<Index>(chain.mean_pi.size()));
  rec.prop_z = prop_z(labels, z_star);
  return rec;
}

// ---------------------------------------------------------------------------
// Coverage

BlockCoverage replicate_coverage(const VariationalParameters &vp,
                                 const GroundTruth &truth_std,
                                 const MatchedFit &matched, double mass,
                                 int joint_samples, int sigma_sample_draws,
                                 std::uint64_t seed) {
  const Index kt = matched.truth_k();
  const Index q = truth_std.q();
  const Index p = truth_std.p();
  const double alpha_total = math::perm_invariant_sum(
      {vp.alpha_hat.data(), static_cast<std::size_t>(vp.k())});

  BlockCoverage cov;
  Rng rng(seed, "sigma_offdiag", 0);

  for (Index t = 0; t < kt; ++t) {
    const Index f = matched.fitted_for_truth[t];

    // pi_k: Beta marginal of the Dirichlet posterior
    ++cov.pi_total;
    if (hdi_beta(vp.alpha_hat[f], alpha_total - vp.alpha_hat[f], mass)
            .contains(truth_std.pi[t]))
      ++cov.pi_covered;

    // mu_{k,j}: Student-t marginal of the normal-inverse-Wishart posterior
    const double t_dof = vp.nu_hat[f] - q + 1.0;
    for (Index j = 0; j < q; ++j) {
      ++cov.mu_total;
      const double scale =
          vp.phi_hat[f](j, j) / (vp.beta_hat[f] * t_dof);
      if (hdi_student_t(t_dof, vp.m_hat[f][j], scale, mass)
              .contains(truth_std.mu[t][j]))
        ++cov.mu_covered;
    }

    // Sigma diagonal: scaled inverse-chi-square marginal
    for (Index j = 0; j < q; ++j) {
      ++cov.sigma_total;
      const double shape = 0.5 * (vp.nu_hat[f] - q + 1.0);
      const double rate = 0.5 * vp.phi_hat[f](j, j);
      if (hdi_inverse_gamma(shape, rate, mass)
              .contains(truth_std.sigma[t](j, j)))
        ++cov.sigma_covered;
    }
    // Sigma off-diagonals: sampled inverse-Wishart HDIs
    if (q > 1) {
      const Matrix phi_inv_chol =
          SpdChol(SpdChol(vp.phi_hat[f]).inverse()).lower();
      std::vector<std::vector<double>> draws;
      draws.resize(static_cast<std::size_t>(q * (q - 1) / 2));
      for (auto &d : draws) d.reserve(sigma_sample_draws);
      for (int s = 0; s < sigma_sample_draws; ++s) {
        const Matrix lambda = rng.wishart(vp.nu_hat[f], phi_inv_chol);
        const Matrix sigma = SpdChol(lambda).inverse();
        std::size_t slot = 0;
        for (Index a = 0; a < q; ++a)
          for (Index b = a + 1; b < q; ++b) draws[slot++].push_back(sigma(a, b));
      }
      std::size_t slot = 0;
      for (Index a = 0; a < q; ++a)
        for (Index b = a + 1; b < q; ++b) {
          ++cov.sigma_total;
          if (hdi_from_samples(std::move(draws[slot++]), mass)
                  .contains(truth_std.sigma[t](a, b)))
            ++cov.sigma_covered;
        }
    }

    // psi_{k,j,g}: Beta marginals of the Dirichlet posteriors
    for (Index j = 0; j < p; ++j) {
      const double eta_total = vp.eta_hat[j].row(f).sum();
      for (Index g = 0; g < truth_std.cards[j]; ++g) {
        ++cov.psi_total;
        const double e = vp.eta_hat[j](f, g);
        if (hdi_beta(e, eta_total - e, mass)
                .contains(truth_std.psi[j](t, g)))
          ++cov.psi_covered;
      }
    }
  }

  // overall: joint density-quantile membership (requires a bijection)
  if (vp.k() == kt) {
    GroundTruth reordered = truth_std;
    for (Index t = 0; t < kt; ++t) {
      const Index f = matched.fitted_for_truth[t];
      reordered.pi[f] = truth_std.pi[t];
      reordered.mu[f] = truth_std.mu[t];
      reordered.sigma[f] = truth_std.sigma[t];
      for (Index j = 0; j < p; ++j)
        reordered.psi[j].row(f) = truth_std.psi[j].row(t);
    }
    cov.overall = joint_hdi_covers_vi(vp, reordered, mass, joint_samples,
                                      derive_seed(seed, "joint", 0));
  }
  return cov;
}

CoverageRecord coverage_study(const CoverageConfig &config) {
  if (config.replicates < 1)
    throw std::invalid_argument("coverage_study: need at least 1 replicate");

  struct Slot {
    BlockCoverage cov;
    bool ok = false;
  };
  std::vector<Slot> slots(config.replicates);

  auto run_replicate = [&](int r) {
    const std::uint64_t seed_r =
        derive_seed(config.seed, "replicate", static_cast<std::uint64_t>(r));
    const GroundTruth truth =
        sim::gen_truth({config.scenario, config.n, seed_r});
    auto [data, z_star] =
        sim::sample_dataset(truth, config.n, derive_seed(seed_r, "data", 0));
    auto [std_data, transform] = standardize(data);
    const PriorHyperparameters priors =
        default_priors(std_data, static_cast<int>(truth.k()));
    FitConfig fit_config;
    fit_config.seed = seed_r;
    fit_config.threads = 1;
    const FitResult fitted = fit(std_data, priors, fit_config);

    const GroundTruth truth_std = transform_truth(truth, transform);
    const MatchedFit matched =
        match_components(fitted.vp.m_hat, truth_std.mu);
    slots[r].cov = replicate_coverage(
        fitted.vp, truth_std, matched, config.mass, config.joint_samples,
        config.sigma_sample_draws, derive_seed(seed_r, "coverage", 0));
    slots[r].ok = true;
  };

  int threads = config.threads;
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw == 0 ? 1 : static_cast<int>(hw);
  }
  threads = std::min(threads, config.replicates);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= config.replicates) return;
      try {
        run_replicate(r);
      } catch (const std::exception &) {
        slots[r].ok = false;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &th : pool) th.join();

  CoverageRecord rec;
  rec.replicates = config.replicates;
  long pi_c = 0, pi_t = 0, mu_c = 0, mu_t = 0, sg_c = 0, sg_t = 0, ps_c = 0,
       ps_t = 0;
  int overall = 0, ok_count = 0;
  int strict_pi = 0, strict_mu = 0, strict_sigma = 0, strict_psi = 0;
  for (const Slot &slot : slots) {
    if (!slot.ok) {
      ++rec.failures;
      continue;
    }
    ++ok_count;
    const BlockCoverage &c = slot.cov;
    pi_c += c.pi_covered;
    pi_t += c.pi_total;
    mu_c += c.mu_covered;
    mu_t += c.mu_total;
    sg_c += c.sigma_covered;
    sg_t += c.sigma_total;
    ps_c += c.psi_covered;
    ps_t += c.psi_total;
    overall += c.overall ? 1 : 0;
    strict_pi += (c.pi_covered == c.pi_total) ? 1 : 0;
    strict_mu += (c.mu_covered == c.mu_total) ? 1 : 0;
    strict_sigma += (c.sigma_covered == c.sigma_total) ? 1 : 0;
    strict_psi += (c.psi_covered == c.psi_total) ? 1 : 0;
  }
  if (ok_count == 0) return rec;
  const double denom = static_cast<double>(ok_count);
  rec.pi = pi_t > 0 ? static_cast<double>(pi_c) / pi_t : 0.0;
  rec.mu = mu_t > 0 ? static_cast<double>(mu_c) / mu_t : 0.0;
  rec.sigma = sg_t > 0 ? static_cast<double>(sg_c) / sg_t : 0.0;
  rec.psi = ps_t > 0 ? static_cast<double>(ps_c) / ps_t : 0.0;
  rec.overall = overall / denom;
  rec.strict_pi = strict_pi / denom;
  rec.strict_mu = strict_mu / denom;
  rec.strict_sigma = strict_sigma / denom;
  rec.strict_psi = strict_psi / denom;
  return rec;
}

}  // namespace mixvi::eval
