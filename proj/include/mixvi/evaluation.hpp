// Evaluation harness: component matching, parameter and predictive error
// metrics, highest density intervals, and frequentist coverage studies.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mixvi/cavi.hpp"
#include "mixvi/gibbs.hpp"
#include "mixvi/model.hpp"
#include "mixvi/simulation.hpp"

namespace mixvi::eval {

// Matching of fitted components to ground-truth components by minimum
// total squared distance between posterior mean locations. When the fit
// has more components than the truth, the extras stay unmatched.
struct MatchedFit {
  std::vector<Index> fitted_for_truth;  // truth index -> fitted index
  double total_cost = 0.0;

  Index truth_k() const { return static_cast<Index>(fitted_for_truth.size()); }
};

MatchedFit match_components(const std::vector<Vector> &fitted_means,
                            const std::vector<Vector> &truth_means);

// Point estimates of all four parameter blocks.
struct PointEstimates {
  Vector pi;
  std::vector<Vector> mu;
  std::vector<Matrix> sigma;
  std::vector<Matrix> psi;   // p matrices, K x d_j
};

// Posterior means of a variational state: m_hat, phi_hat/(nu_hat-q-1),
// normalized alpha_hat and eta_hat. Throws when nu_hat <= q+1 (the
// inverse-Wishart mean is undefined).
PointEstimates posterior_means(const VariationalParameters &vp);
PointEstimates posterior_means(const ChainSummary &chain);

struct MetricsRecord {
  double error_mu = 0.0;
  double error_sigma = 0.0;
  double error_pi = 0.0;
  double error_psi = 0.0;
  double prop_z = 0.0;
  std::optional<double> error_logppd;
};

// Mean absolute errors of the matched point estimates against the truth,
// averaged entrywise per block over the truth components only.
MetricsRecord param_errors(const MatchedFit &matched,
                           const GroundTruth &truth,
                           const PointEstimates &estimates);

// Relabels fitted hard assignments into truth component indices;
// unmatched fitted components map to 0 (never equal to a truth label).
std::vector<int> relabel_to_truth(const std::vector<int> &fitted_labels,
                                  const MatchedFit &matched, Index fitted_k);

// Fraction of equal labels.
double prop_z(const std::vector<int> &labels, const std::vector<int> &z_star);

// Mean |ln p(x,c | truth) - log_ppd(x,c)| over a test set already mapped
// into the space the model was fitted in.
double error_logppd(const MixedDataset &test_data, const GroundTruth &truth,
                    const VariationalParameters &vp);

// ---------------------------------------------------------------------------
// Highest density intervals

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

// Shortest interval of the given mass, located by bisecting the density
// level; monotone densities degrade to a one-sided interval at the
// support edge.
Interval hdi_beta(double a, double b, double mass);
Interval hdi_student_t(double dof, double loc, double scale, double mass);
Interval hdi_inverse_gamma(double shape, double rate, double mass);
// Shortest window covering ceil(mass * size) sorted sample values.
Interval hdi_from_samples(std::vector<double> samples, double mass);

// ---------------------------------------------------------------------------
// Joint (overall) HDI membership via the density-quantile rule: draw
// samples from the posterior, take the empirical (1-mass) quantile of
// their log densities, and declare the truth covered when its log density
// reaches that level.

// Variational version; truth must be reordered into fitted component
// order and expressed in the fitted (standardized) space. samples >= 1000.
bool joint_hdi_covers_vi(const VariationalParameters &vp,
                         const GroundTruth &truth_in_fitted_order,
                         double mass, int samples, std::uint64_t seed);

// Gibbs version from per-sample log joint densities.
bool joint_hdi_covers_gibbs(const std::vector<double> &sample_log_joint,
                            double truth_log_joint, double mass);

// ---------------------------------------------------------------------------
// End-to-end metric pipelines (shared by the CLI and the acceptance suite)

// Matched metrics of a variational fit against the original-space truth.
// A test set of size min(0.4 n_train, 2000) is drawn from the truth with
// the given seed for the predictive error.
MetricsRecord evaluate_vi(const VariationalParameters &vp,
                          const GroundTruth &truth,
                          const StandardizationTransform &transform,
                          const std::vector<int> &z_star, Index n_train,
                          std::uint64_t test_seed);

// Same for a Gibbs chain; the predictive error is left unset.
MetricsRecord evaluate_gibbs(const ChainSummary &chain,
                             const GroundTruth &truth,
                             const StandardizationTransform &transform,
                             const std::vector<int> &z_star);

// ---------------------------------------------------------------------------
// Coverage study

struct CoverageConfig {
  sim::Scenario scenario = sim::Scenario::kS1;
  Index n = 5000;
  int replicates = 100;
  std::uint64_t seed = 0;
  double mass = 0.95;
  int joint_samples = 10000;
  int sigma_sample_draws = 10000;  // inverse-Wishart draws for off-diagonals
  int threads = 0;
};

struct CoverageRecord {
  // fraction of scalar HDIs containing their true value, pooled over
  // replicates and entries
  double pi = 0.0;
  double sigma = 0.0;
  double mu = 0.0;
  double psi = 0.0;
  // fraction of replicates whose joint HDI contains the full truth
  double overall = 0.0;
  // fraction of replicates with every entry of the block covered
  double strict_pi = 0.0;
  double strict_sigma = 0.0;
  double strict_mu = 0.0;
  double strict_psi = 0.0;
  int replicates = 0;
  int failures = 0;
};

// Per-replicate scalar-HDI membership of one fitted state against a
// matched truth (exposed so single replicates can be tested directly).
struct BlockCoverage {
  int pi_covered = 0, pi_total = 0;
  int mu_covered = 0, mu_total = 0;
  int sigma_covered = 0, sigma_total = 0;
  int psi_covered = 0, psi_total = 0;
  bool overall = false;
};

BlockCoverage replicate_coverage(const VariationalParameters &vp,
                                 const GroundTruth &truth_std,
                                 const MatchedFit &matched, double mass,
                                 int joint_samples, int sigma_sample_draws,
                                 std::uint64_t seed);

// R independent simulate -> fit -> match -> HDI pipelines; replicate
// failures are recorded, not fatal.
CoverageRecord coverage_study(const CoverageConfig &config);

}  // namespace mixvi::eval
