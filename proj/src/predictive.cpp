#include "mixvi/predictive.hpp"

#include <cmath>
#include <stdexcept>

#include "mixvi/math.hpp"

namespace mixvi {

std::vector<PredictiveComponent> predictive_components(
    const VariationalParameters &vp) {
  const Index k = vp.k();
  const Index q = vp.m_hat.empty() ? 0 : vp.m_hat.front().size();
  // reduced independently of component order so that relabeling a state
  // relabels the predictive exactly
  const double alpha_total = math::perm_invariant_sum(
      {vp.alpha_hat.data(), static_cast<std::size_t>(k)});

  std::vector<PredictiveComponent> comps(k);
  for (Index kk = 0; kk < k; ++kk) {
    PredictiveComponent &c = comps[kk];
    c.weight = vp.alpha_hat[kk] / alpha_total;
    c.t_dof = vp.nu_hat[kk] - q + 1.0;
    c.t_loc = vp.m_hat[kk];
    c.t_scale = vp.phi_hat[kk] * (vp.beta_hat[kk] + 1.0) /
                (vp.beta_hat[kk] * c.t_dof);
    c.cat_probs.reserve(vp.eta_hat.size());
    for (const auto &eta : vp.eta_hat) {
      const Vector row = eta.row(kk).transpose();
      c.cat_probs.push_back(row / row.sum());
    }
  }
  return comps;
}

double log_ppd(const Vector &x, const Eigen::Ref<const IntVector> &codes,
               const VariationalParameters &vp,
               const std::vector<int> &cards) {
  if (codes.size() != static_cast<Index>(cards.size()))
    throw std::invalid_argument("log_ppd: wrong number of category codes");
  for (Index j = 0; j < codes.size(); ++j)
    if (codes[j] < 1 || codes[j] > cards[j])
      throw std::invalid_argument("log_ppd: category code out of range at " +
                                  std::to_string(j));

  const auto comps = predictive_components(vp);
  std::vector<double> lw(comps.size());
  for (std::size_t kk = 0; kk < comps.size(); ++kk) {
    const PredictiveComponent &c = comps[kk];
    double v = std::log(c.weight) +
               math::mvt_logpdf(x, c.t_dof, c.t_loc, c.t_scale);
    for (Index j = 0; j < codes.size(); ++j)
      v += std::log(c.cat_probs[j][codes[j] - 1]);
    lw[kk] = v;
  }
  return math::log_sum_exp(lw);
}

MarginalT marginal_continuous(const VariationalParameters &vp, Index k,
                              Index j) {
  const Index q = vp.m_hat.at(k).size();
  if (j < 0 || j >= q)
    throw std::out_of_range("marginal_continuous: dimension out of range");
  MarginalT t;
  t.dof = vp.nu_hat[k] - q + 1.0;
  t.loc = vp.m_hat[k][j];
  t.scale = vp.phi_hat[k](j, j) * (vp.beta_hat[k] + 1.0) /
            (vp.beta_hat[k] * t.dof);
  return t;
}

Vector marginal_categorical(const VariationalParameters &vp, Index k,
                            Index j) {
  const Vector row = vp.eta_hat.at(j).row(k).transpose();
  return row / row.sum();
}

double marginal_t_pdf(const MarginalT &t, double x) {
  const double sd = std::sqrt(t.scale);
  const double u = (x - t.loc) / sd;
  const double lp = std::lgamma(0.5 * (t.dof + 1.0)) -
                    std::lgamma(0.5 * t.dof) -
                    0.5 * std::log(t.dof * M_PI) - std::log(sd) -
                    0.5 * (t.dof + 1.0) * std::log1p(u * u / t.dof);
  return std::exp(lp);
}

double marginal_t_cdf(const MarginalT &t, double x) {
  return math::student_t_cdf((x - t.loc) / std::sqrt(t.scale), t.dof);
}

double marginal_t_quantile(const MarginalT &t, double prob) {
  if (!(prob > 0.0) || !(prob < 1.0))
    throw std::invalid_argument("marginal_t_quantile: prob must be in (0,1)");
  const double sd = std::sqrt(t.scale);
  double lo = t.loc - sd, hi = t.loc + sd;
  while (marginal_t_cdf(t, lo) > prob) lo -= (t.loc - lo);
  while (marginal_t_cdf(t, hi) < prob) hi += (hi - t.loc);
  return math::invert_cdf([&](double v) { return marginal_t_cdf(t, v); },
                          prob, lo, hi);
}

std::vector<int> hard_assign(const VariationalParameters &vp) {
  std::vector<int> labels(vp.resp.rows());
  for (Index i = 0; i < vp.resp.rows(); ++i) {
    Index best = 0;
    for (Index kk = 1; kk < vp.resp.cols(); ++kk)
      if (vp.resp(i, kk) > vp.resp(i, best)) best = kk;
    labels[i] = static_cast<int>(best) + 1;
  }
  return labels;
}

}  // namespace mixvi
