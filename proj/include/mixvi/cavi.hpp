// Coordinate-ascent variational inference for the mixed-data mixture
// model: k-prototypes initialization, global/local updates, ELBO in two
// algebraic forms, the fit driver, and the simplified-estimate map used
// as a convergence diagnostic.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixvi/model.hpp"

namespace mixvi {

struct ElboTrace {
  std::vector<double> values;            // one entry per completed sweep
  std::optional<Index> converged_at;     // sweep index, if converged
};

enum class InitMethod { kKPrototypes, kRandom };

struct FitConfig {
  double tol = 1e-6;          // relative ELBO tolerance
  Index max_sweeps = 500;
  std::uint64_t seed = 0;
  double epsilon = 1.0;       // damping for the diagnostic map, 1 = plain CAVI
  InitMethod init = InitMethod::kKPrototypes;
  int threads = 0;            // worker threads for the local update, 0 = auto
};

struct FitResult {
  VariationalParameters vp;
  ElboTrace trace;
};

// Hard k-prototypes labels (0-based), Huang-style alternating assignment
// with categorical mismatch weight gamma = mean continuous column
// variance; 10 restarts, best within-cluster cost kept.
std::vector<Index> kprototypes_labels(const MixedDataset &data, int k,
                                      std::uint64_t seed);

// Initial responsibilities: 0.9 at the k-prototypes cluster of each point
// and 0.1 elsewhere. Rows deliberately do not sum to one; the first local
// update normalizes them.
Matrix init_kprototypes(const MixedDataset &data, int k, std::uint64_t seed);

// One global update: recomputes all variational hyperparameters from the
// given responsibilities (which may be unnormalized but must be
// nonnegative and finite). The returned state stores resp as given.
VariationalParameters update_global(const MixedDataset &data,
                                    const PriorHyperparameters &priors,
                                    const Matrix &resp);

// One local update: responsibilities from the current global state,
// computed in log space; every row sums to 1 within 1e-12.
Matrix update_local(const MixedDataset &data, const VariationalParameters &vp,
                    const PriorHyperparameters &priors, int threads = 0);

enum class ElboForm { kKlPaired, kDirect };

// Evidence lower bound of the given state. The production path is the
// KL-paired form; the eleven-term direct form is kept for equivalence
// checks and must agree with it.
double compute_elbo(const MixedDataset &data, const PriorHyperparameters &priors,
                    const VariationalParameters &vp,
                    ElboForm form = ElboForm::kKlPaired);

// Alternates global and local updates until |ELBO_t - ELBO_{t-1}| <
// tol * (1 + |ELBO_t|) or max_sweeps. Non-convergence is reported through
// trace.converged_at, not an exception. The returned hyperparameters are
// refreshed once against the final responsibilities, so the
// simplified-estimate reconstruction identities hold on the result.
FitResult fit(const MixedDataset &data, const PriorHyperparameters &priors,
              const FitConfig &config);

// fit() with caller-supplied initial responsibilities.
FitResult fit_from_responsibilities(const MixedDataset &data,
                                    const PriorHyperparameters &priors,
                                    const Matrix &resp0,
                                    const FitConfig &config);

// The reparametrized state (weights, means, precisions, categorical
// probabilities) on which the damped map acts.
struct SimplifiedEstimates {
  Vector pi_hat;                      // K
  std::vector<Vector> mu_hat;         // K vectors of size q
  std::vector<Matrix> lambda_hat;     // K precision matrices
  std::vector<Matrix> psi_hat;        // p matrices, K x d_j

  Index k() const { return pi_hat.size(); }
};

// Simplified estimates of a state, plus a consistency check of the
// hyperparameter reconstruction identities (alpha_hat = n pi_hat + alpha
// and friends). Throws EmptyComponentError when a component has no mass.
SimplifiedEstimates simplified_estimates(const MixedDataset &data,
                                         const VariationalParameters &vp,
                                         const PriorHyperparameters &priors);

// Variational hyperparameters reconstructed from simplified estimates.
VariationalParameters simplified_to_variational(const SimplifiedEstimates &theta,
                                                const PriorHyperparameters &priors,
                                                Index n);

// One step of the damped map: (1 - eps) Theta + eps T(Theta), where T is
// a full CAVI round expressed on simplified estimates and the mixture
// weight expectation uses the digamma(K alpha + n) denominator of the
// theory variant. eps = 1 reproduces a plain CAVI round.
SimplifiedEstimates damped_iterate(const SimplifiedEstimates &theta,
                                   const MixedDataset &data,
                                   const PriorHyperparameters &priors,
                                   double epsilon);

}  // namespace mixvi
