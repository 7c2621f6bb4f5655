// Conjugate Gibbs sampler for the identical model, used as the MCMC
// comparator for the variational fits.
#pragma once

#include <cstdint>
#include <vector>

#include "mixvi/math.hpp"
#include "mixvi/model.hpp"
#include "mixvi/rng.hpp"

namespace mixvi {

// Mixture density at fixed parameter values, with cached Cholesky
// factors. Shared by the label update, the predictive error metric and
// the joint-density coverage check.
class MixtureDensity {
 public:
  MixtureDensity(const Vector &pi, const std::vector<Vector> &mu,
                 const std::vector<Matrix> &sigma,
                 const std::vector<Matrix> &psi);
  explicit MixtureDensity(const GroundTruth &truth);

  Index k() const { return log_pi_.size(); }
  // ln pi_k + ln N(x | mu_k, Sigma_k) + sum_j ln psi_{k,j,c_j} for every k.
  void component_log_weights(const Vector &x,
                             const Eigen::Ref<const IntVector> &codes,
                             std::vector<double> &out) const;
  // log of the mixture likelihood of one observation.
  double logpdf(const Vector &x,
                const Eigen::Ref<const IntVector> &codes) const;

 private:
  Vector log_pi_;
  std::vector<Vector> mu_;
  std::vector<math::SpdChol> chol_;
  Vector logdet_;
  std::vector<Matrix> log_psi_;
};

struct GibbsState {
  std::vector<int> z;           // 1-based component labels
  Vector pi;
  std::vector<Vector> mu;
  std::vector<Matrix> sigma;
  std::vector<Matrix> psi;      // p matrices, K x d_j
};

// Closed-form conditional posterior parameters, exposed for exactness
// tests as well as the sweep itself.
struct NiwParams {
  Vector m;
  double beta = 0.0;
  double nu = 0.0;
  Matrix phi;
};
NiwParams niw_conditional(const MixedDataset &data, const std::vector<int> &z,
                          int component, const PriorHyperparameters &priors);
Vector psi_conditional(const MixedDataset &data, const std::vector<int> &z,
                       int component, Index column,
                       const PriorHyperparameters &priors);
Vector pi_conditional(const std::vector<int> &z, int k,
                      const PriorHyperparameters &priors);

// One full scan: labels given parameters, then psi, (mu, Sigma), pi given
// labels. Empty components fall back to their priors naturally.
void gibbs_sweep(GibbsState &state, const MixedDataset &data,
                 const PriorHyperparameters &priors, Rng &rng);

struct ChainConfig {
  Index sweeps = 2000;
  Index burn_in = 1000;
  std::uint64_t seed = 0;
  Index thin = 0;              // keep every thin-th retained state (0 = none)
  bool store_log_joint = false;
};

struct ChainSummary {
  Vector mean_pi;
  std::vector<Vector> mean_mu;
  std::vector<Matrix> mean_sigma;
  std::vector<Matrix> mean_psi;
  std::vector<int> last_z;             // 1-based
  Index sweeps = 0;
  Index burn_in = 0;
  Index retained = 0;
  std::vector<double> log_joint;       // per retained sweep, if requested
  std::vector<GibbsState> thinned;     // optional sample dump
};

// Runs the sampler from a k-prototypes-seeded start and returns the
// posterior-mean summary over the retained sweeps plus the final labels.
ChainSummary run_chain(const MixedDataset &data,
                       const PriorHyperparameters &priors,
                       const ChainConfig &config);

// ln p(x, c, pi, mu, Sigma, psi): mixture likelihood with labels summed
// out, plus the prior densities (covariance parameterization).
double log_joint_density(const MixedDataset &data,
                         const PriorHyperparameters &priors, const Vector &pi,
                         const std::vector<Vector> &mu,
                         const std::vector<Matrix> &sigma,
                         const std::vector<Matrix> &psi);

}  // namespace mixvi
