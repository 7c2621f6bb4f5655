// Closed-form variational posterior predictive density, its per-dimension
// marginals, and hard cluster assignment.
#pragma once

#include <vector>

#include "mixvi/model.hpp"

namespace mixvi {

// One mixture component of the posterior predictive: a multivariate t on
// the continuous block and independent categorical factors.
struct PredictiveComponent {
  double weight = 0.0;              // normalized alpha_hat
  double t_dof = 0.0;               // nu_hat - q + 1
  Vector t_loc;                     // m_hat
  Matrix t_scale;                   // phi_hat (beta_hat+1) / (beta_hat t_dof)
  std::vector<Vector> cat_probs;    // p normalized eta_hat rows
};

std::vector<PredictiveComponent> predictive_components(
    const VariationalParameters &vp);

// Log posterior predictive density of one new observation (continuous
// part in the space the model was fitted in). Codes are 1-based.
double log_ppd(const Vector &x, const Eigen::Ref<const IntVector> &codes,
               const VariationalParameters &vp,
               const std::vector<int> &cards);

struct MarginalT {
  double dof = 0.0;
  double loc = 0.0;
  double scale = 0.0;   // squared-scale convention, matching the matrix form
};

// Per-dimension predictive marginals for component k.
MarginalT marginal_continuous(const VariationalParameters &vp, Index k,
                              Index j);
Vector marginal_categorical(const VariationalParameters &vp, Index k, Index j);

double marginal_t_pdf(const MarginalT &t, double x);
double marginal_t_cdf(const MarginalT &t, double x);
double marginal_t_quantile(const MarginalT &t, double prob);

// argmax_k responsibility per row, ties to the lowest index; 1-based.
std::vector<int> hard_assign(const VariationalParameters &vp);

}  // namespace mixvi
