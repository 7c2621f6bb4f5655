// Ground-truth generators for the built-in benchmark scenarios and
// mixed-data sampling from a known mixture.
#pragma once

#include <string>

#include "mixvi/model.hpp"
#include "mixvi/rng.hpp"

namespace mixvi::sim {

enum class Scenario { kOneDim, kS1, kS2, kS3 };

Scenario parse_scenario(const std::string &name);
std::string scenario_name(Scenario s);

struct ScenarioSpec {
  Scenario scenario = Scenario::kOneDim;
  Index n = 0;
  std::uint64_t seed = 0;
};

// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
// R diagonal sign fixed).
Matrix random_orthogonal(Index q, Rng &rng);

// Data-generating parameters for a scenario.
//
// onedim: K*=3, q=p=1, d=3; pi*=(0.4,0.35,0.25), mu*=(0,2,5),
//   Sigma*=(0.1,0.2,0.5), psi*_{k,k}=0.6 and 0.2 off.
// s1: K*=5, q=5; pi* from normalized U(0.5,2) draws; one categorical with
//   d=4 and Dirichlet(5,..,5) rows; mu* pairwise distances in [4K*, 8K*];
//   Sigma*_k = U_k D_k U_k^T with eigenvalues in [k^2/2, k^2].
// s2: K*=5, q=5; 2K* binary categoricals tied to the label (0.9/0.1);
//   mu*_k = e_k; Sigma*_k diagonal with 9 at entry k and 4 elsewhere.
// s3: K*=5, q=5; one categorical with d=K*, psi*_{k,k}=0.75; mu*_k =
//   4K* e_k; Sigma* as s1 with eigenvalues in [(1.6K*)^2/2, (1.6K*)^2].
GroundTruth gen_truth(const ScenarioSpec &spec);

// Samples n observations: z_i ~ Cat(pi*), x_i ~ N(mu*_{z_i}, Sigma*_{z_i}),
// c_ij ~ Cat(psi*_{z_i,j,.}). Labels are returned in truth order (1-based)
// inside the dataset's companion vector.
std::pair<MixedDataset, std::vector<int>> sample_dataset(
    const GroundTruth &truth, Index n, std::uint64_t seed);

}  // namespace mixvi::sim
