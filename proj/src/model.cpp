#include "mixvi/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mixvi {

std::vector<std::string> validate_dataset(const MixedDataset &data) {
  std::vector<std::string> problems;
  std::ostringstream os;

  if (data.n() < 1) problems.emplace_back("dataset has no rows");
  if (data.c.rows() != data.x.rows() && data.p() > 0 && data.q() > 0) {
    os.str("");
    os << "continuous block has " << data.x.rows()
       << " rows but categorical block has " << data.c.rows();
    problems.push_back(os.str());
  }
  if (static_cast<Index>(data.cards.size()) != data.p()) {
    os.str("");
    os << "expected " << data.p() << " cardinalities, got "
       << data.cards.size();
    problems.push_back(os.str());
    return problems;
  }

  for (Index j = 0; j < data.p(); ++j) {
    if (data.cards[j] < 2) {
      os.str("");
      os << "cardinality " << data.cards[j] << " at column " << j
         << " (need >= 2)";
      problems.push_back(os.str());
    }
  }
  for (Index i = 0; i < data.x.rows(); ++i)
    for (Index j = 0; j < data.x.cols(); ++j)
      if (!std::isfinite(data.x(i, j))) {
        os.str("");
        os << "non-finite continuous value at (" << i << "," << j << ")";
        problems.push_back(os.str());
      }
  for (Index i = 0; i < data.c.rows(); ++i)
    for (Index j = 0; j < data.c.cols(); ++j) {
      const int code = data.c(i, j);
      if (code < 1 || code > data.cards[j]) {
        os.str("");
        os << "category out of range at (" << i << "," << j << "): code "
           << code << " with cardinality " << data.cards[j];
        problems.push_back(os.str());
      }
    }
  return problems;
}

void require_valid(const MixedDataset &data) {
  const auto problems = validate_dataset(data);
  if (problems.empty()) return;
  std::ostringstream os;
  os << "invalid dataset:";
  for (const auto &p : problems) os << "\n  - " << p;
  throw std::invalid_argument(os.str());
}

std::pair<MixedDataset, StandardizationTransform> standardize(
    const MixedDataset &data) {
  const Index n = data.n();
  const Index q = data.q();
  if (n < 2) throw std::invalid_argument("standardize: need at least 2 rows");

  StandardizationTransform t;
  t.means = data.x.colwise().mean();
  t.sds.resize(q);
  for (Index j = 0; j < q; ++j) {
    const double ss = (data.x.col(j).array() - t.means[j]).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0))
      throw std::invalid_argument("standardize: column " + std::to_string(j) +
                                  " is constant");
    t.sds[j] = sd;
  }

  MixedDataset out = data;
  out.x = apply_transform(data.x, t);
  return {std::move(out), std::move(t)};
}

Matrix apply_transform(const Matrix &x, const StandardizationTransform &t) {
  return (x.rowwise() - t.means.transpose()).array().rowwise() /
         t.sds.transpose().array();
}

Matrix invert_transform(const Matrix &x, const StandardizationTransform &t) {
  return (x.array().rowwise() * t.sds.transpose().array()).matrix().rowwise() +
         t.means.transpose();
}

GroundTruth transform_truth(const GroundTruth &truth,
                            const StandardizationTransform &t) {
  GroundTruth out = truth;
  const Vector inv_sd = t.sds.cwiseInverse();
  for (Index k = 0; k < truth.k(); ++k) {
    out.mu[k] = (truth.mu[k] - t.means).cwiseProduct(inv_sd);
    out.sigma[k] =
        inv_sd.asDiagonal() * truth.sigma[k] * inv_sd.asDiagonal();
  }
  return out;
}

PriorHyperparameters default_priors(const MixedDataset &data, int k) {
  if (k < 1) throw std::invalid_argument("default_priors: K must be >= 1");
  const Index q = data.q();
  PriorHyperparameters priors;
  priors.k = k;
  priors.m.assign(k, Vector::Zero(q));
  priors.beta = 1.0;
  priors.nu = static_cast<double>(q) + k + 1.0;
  priors.phi = 0.25 * Matrix::Identity(q, q);
  priors.alpha = 1.0 / k;
  priors.eta.resize(data.p());
  for (Index j = 0; j < data.p(); ++j) priors.eta[j] = 1.0 / data.cards[j];
  return priors;
}

}  // namespace mixvi
