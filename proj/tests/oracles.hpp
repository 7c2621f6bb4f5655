// Independent reference implementations used as test oracles. These stay
// deliberately naive (plain loops, textbook formulas) and share no code
// with the library paths they check.
#pragma once

#include <functional>
#include <vector>

#include "mixvi/cavi.hpp"
#include "mixvi/model.hpp"

namespace oracles {

using mixvi::Index;
using mixvi::Matrix;
using mixvi::Vector;

// Determinant by recursive cofactor expansion.
double cofactor_determinant(const Matrix &m);

// Minimum-cost assignment by exhaustive search over all permutations.
std::pair<std::vector<Index>, double> brute_force_assignment(
    const Matrix &cost);

// Adaptive Simpson quadrature on [a, b].
double integrate(const std::function<double(double)> &f, double a, double b,
                 double tol = 1e-10, int depth = 30);

// One CAVI global update written as direct summations of the update
// equations.
mixvi::VariationalParameters naive_update_global(
    const mixvi::MixedDataset &data, const mixvi::PriorHyperparameters &priors,
    const Matrix &resp);

// One CAVI local update via direct evaluation of the three expectation
// terms and plain normalization.
Matrix naive_update_local(const mixvi::MixedDataset &data,
                          const mixvi::VariationalParameters &vp,
                          const mixvi::PriorHyperparameters &priors);

// Random small problem instances for oracle-equivalence sweeps.
mixvi::MixedDataset random_instance(Index n, Index q, Index p,
                                    std::uint64_t seed);

}  // namespace oracles
