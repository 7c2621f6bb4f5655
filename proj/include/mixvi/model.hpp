// Canonical data model: mixed continuous/categorical datasets, prior
// hyperparameters, the variational state, and ground truth for
// simulation studies.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mixvi/common.hpp"

namespace mixvi {

// n observations with q continuous and p categorical columns. Category
// codes are 1-based, c(i, j) in {1, ..., cards[j]}, matching the on-disk
// CSV format.
struct MixedDataset {
  Matrix x;           // n x q
  IntMatrix c;        // n x p
  std::vector<int> cards;

  Index n() const { return x.rows(); }
  Index q() const { return x.cols(); }
  Index p() const { return c.cols(); }
};

// Per-column affine transform applied to the continuous block.
struct StandardizationTransform {
  Vector means;
  Vector sds;

  bool identity() const {
    return means.isZero(0.0) && (sds.array() == 1.0).all();
  }
};

struct PriorHyperparameters {
  int k = 1;                 // number of mixture components
  std::vector<Vector> m;     // K location vectors
  double beta = 1.0;         // location precision scale
  double nu = 0.0;           // Wishart degrees of freedom, > q - 1
  Matrix phi;                // Wishart scale matrix (SPD, q x q)
  double alpha = 1.0;        // mixture weight concentration
  Vector eta;                // per categorical column concentration
};

// The CAVI state. eta_hat is stored per categorical column as a K x d_j
// matrix; resp is the n x K responsibility matrix.
struct VariationalParameters {
  Vector alpha_hat;              // K
  std::vector<Vector> m_hat;     // K vectors of size q
  Vector beta_hat;               // K
  Vector nu_hat;                 // K
  std::vector<Matrix> phi_hat;   // K SPD matrices, q x q
  std::vector<Matrix> eta_hat;   // p matrices, K x d_j
  Matrix resp;                   // n x K

  Index k() const { return alpha_hat.size(); }
};

// Data-generating parameters for simulated datasets.
struct GroundTruth {
  Vector pi;                          // K* mixture weights
  std::vector<Vector> mu;             // K* component means
  std::vector<Matrix> sigma;          // K* covariance matrices
  std::vector<Matrix> psi;            // p matrices, K* x d_j
  std::vector<int> cards;
  std::optional<std::vector<int>> z;  // 1-based component labels, if sampled

  Index k() const { return pi.size(); }
  Index q() const { return mu.empty() ? 0 : mu.front().size(); }
  Index p() const { return static_cast<Index>(psi.size()); }
};

// Returns a complete list of invariant violations (empty when valid):
// category codes in range, cardinalities >= 2, finite continuous values,
// n >= 1, consistent row counts.
std::vector<std::string> validate_dataset(const MixedDataset &data);

// validate_dataset that throws std::invalid_argument listing all problems.
void require_valid(const MixedDataset &data);

// Centers and scales each continuous column to mean 0, sample sd 1
// (n-1 denominator). Throws on constant columns.
std::pair<MixedDataset, StandardizationTransform> standardize(
    const MixedDataset &data);

// Applies / inverts a transform on raw continuous rows.
Matrix apply_transform(const Matrix &x, const StandardizationTransform &t);
Matrix invert_transform(const Matrix &x, const StandardizationTransform &t);

// Maps ground-truth parameters into the standardized data space, so that
// errors can be computed against a model fitted on standardized data.
GroundTruth transform_truth(const GroundTruth &truth,
                            const StandardizationTransform &t);

// The default prior choices: m_k = 0, beta = 1, phi = 0.25 I,
// nu = q + K + 1, alpha = 1/K, eta_j = 1/d_j.
PriorHyperparameters default_priors(const MixedDataset &data, int k);

}  // namespace mixvi
