// Shared aliases and error types.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mixvi {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntMatrix = Eigen::MatrixXi;
using IntVector = Eigen::VectorXi;

// Cholesky failed: the matrix handed to an SPD routine is not positive definite.
struct NotPositiveDefiniteError : std::runtime_error {
  explicit NotPositiveDefiniteError(const std::string &what)
      : std::runtime_error(what) {}
};

// A mixture component has (numerically) no mass, so a per-component
// quantity such as a weighted mean is undefined.
struct EmptyComponentError : std::runtime_error {
  explicit EmptyComponentError(const std::string &what)
      : std::runtime_error(what) {}
};

}  // namespace mixvi
