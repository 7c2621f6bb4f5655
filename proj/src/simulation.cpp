#include "mixvi/simulation.hpp"

#include <cmath>
#include <stdexcept>

#include "mixvi/math.hpp"

namespace mixvi::sim {

Scenario parse_scenario(const std::string &name) {
  if (name == "onedim") return Scenario::kOneDim;
  if (name == "s1") return Scenario::kS1;
  if (name == "s2") return Scenario::kS2;
  if (name == "s3") return Scenario::kS3;
  throw std::invalid_argument("unknown scenario '" + name +
                              "' (expected onedim|s1|s2|s3)");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kOneDim: return "onedim";
    case Scenario::kS1: return "s1";
    case Scenario::kS2: return "s2";
    case Scenario::kS3: return "s3";
  }
  return "?";
}

Matrix random_orthogonal(Index q, Rng &rng) {
  if (q < 1) throw std::invalid_argument("random_orthogonal: q must be >= 1");
  Matrix g(q, q);
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < q; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix qmat = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // sign-correct so the distribution is Haar rather than biased by the
  // QR convention
  for (Index j = 0; j < q; ++j)
    if (r(j, j) < 0.0) qmat.col(j) = -qmat.col(j);
  return qmat;
}

namespace {

Vector normalized_uniform_weights(Index k, Rng &rng) {
  Vector w(k);
  for (Index i = 0; i < k; ++i) w[i] = rng.uniform(0.5, 2.0);
  return w / w.sum();
}

// Covariance from random eigenvalues conjugated by a Haar orthogonal matrix.
Matrix random_covariance(Index q, double eig_lo, double eig_hi, Rng &rng) {
  Vector eigs(q);
  for (Index i = 0; i < q; ++i) eigs[i] = rng.uniform(eig_lo, eig_hi);
  const Matrix u = random_orthogonal(q, rng);
  return u * eigs.asDiagonal() * u.transpose();
}

// Sequential rejection: place K points in [0, side]^q with all pairwise
// distances inside [dist_lo, dist_hi]. The box diagonal equals dist_hi so
// the upper bound holds by construction.
std::vector<Vector> separated_means(Index k, Index q, double dist_lo,
                                    double dist_hi, Rng &rng) {
  const double side = dist_hi / std::sqrt(static_cast<double>(q));
  constexpr int kMaxProposals = 100000;
  int proposals = 0;
  std::vector<Vector> mus;
  while (proposals < kMaxProposals) {
    Vector candidate(q);
    for (Index d = 0; d < q; ++d) candidate[d] = rng.uniform(0.0, side);
    ++proposals;
    bool ok = true;
    for (const auto &mu : mus)
      if ((candidate - mu).norm() < dist_lo) {
        ok = false;
        break;
      }
    if (ok) {
      mus.push_back(std::move(candidate));
      if (static_cast<Index>(mus.size()) == k) return mus;
    } else if (proposals % 20000 == 0) {
      mus.clear();  // restart a stuck configuration
    }
  }
  throw std::runtime_error(
      "separated_means: proposal budget exhausted before placing all means");
}

GroundTruth truth_onedim() {
  GroundTruth t;
  t.pi = Vector(3);
  t.pi << 0.4, 0.35, 0.25;
  t.mu = {Vector::Constant(1, 0.0), Vector::Constant(1, 2.0),
          Vector::Constant(1, 5.0)};
  t.sigma = {Matrix::Constant(1, 1, 0.1), Matrix::Constant(1, 1, 0.2),
             Matrix::Constant(1, 1, 0.5)};
  Matrix psi(3, 3);
  psi.setConstant(0.2);
  psi.diagonal().setConstant(0.6);
  t.psi = {psi};
  t.cards = {3};
  return t;
}

GroundTruth truth_s1(Rng &rng) {
  const Index k = 5, q = 5;
  GroundTruth t;
  t.pi = normalized_uniform_weights(k, rng);
  const int d = 4;
  Matrix psi(k, d);
  for (Index kk = 0; kk < k; ++kk)
    psi.row(kk) = rng.dirichlet(Vector::Constant(d, 5.0)).transpose();
  t.psi = {psi};
  t.cards = {d};
  t.mu = separated_means(k, q, 4.0 * k, 8.0 * k, rng);
  for (Index kk = 0; kk < k; ++kk) {
    const double c = static_cast<double>(kk + 1);
    t.sigma.push_back(random_covariance(q, 0.5 * c * c, c * c, rng));
  }
  return t;
}

GroundTruth truth_s2(Rng &rng) {
  const Index k = 5, q = 5;
  GroundTruth t;
  t.pi = normalized_uniform_weights(k, rng);
  const Index p = 2 * k;
  t.cards.assign(p, 2);
  for (Index j = 0; j < p; ++j) {
    Matrix psi(k, 2);
    for (Index kk = 0; kk < k; ++kk) {
      const bool tied = (j == 2 * kk) || (j == 2 * kk + 1);
      psi(kk, 0) = tied ? 0.9 : 0.1;
      psi(kk, 1) = 1.0 - psi(kk, 0);
    }
    t.psi.push_back(psi);
  }
  for (Index kk = 0; kk < k; ++kk) {
    t.mu.push_back(Vector::Unit(q, kk));
    Vector diag = Vector::Constant(q, 4.0);
    diag[kk] = 9.0;
    t.sigma.push_back(diag.asDiagonal());
  }
  return t;
}

GroundTruth truth_s3(Rng &rng) {
  const Index k = 5, q = 5;
  GroundTruth t;
  t.pi = normalized_uniform_weights(k, rng);
  const int d = static_cast<int>(k);
  Matrix psi(k, d);
  psi.setConstant(0.25 / (d - 1));
  psi.diagonal().setConstant(0.75);
  t.psi = {psi};
  t.cards = {d};
  const double spread = 1.6 * static_cast<double>(k);
  for (Index kk = 0; kk < k; ++kk) {
    t.mu.push_back(4.0 * static_cast<double>(k) * Vector::Unit(q, kk));
    t.sigma.push_back(
        random_covariance(q, 0.5 * spread * spread, spread * spread, rng));
  }
  return t;
}

}  // namespace

GroundTruth gen_truth(const ScenarioSpec &spec) {
  Rng rng(spec.seed, "truth", static_cast<std::uint64_t>(spec.scenario));
  switch (spec.scenario) {
    case Scenario::kOneDim: return truth_onedim();
    case Scenario::kS1: return truth_s1(rng);
    case Scenario::kS2: return truth_s2(rng);
    case Scenario::kS3: return truth_s3(rng);
  }
  throw std::logic_error("gen_truth: unreachable");
}

std::pair<MixedDataset, std::vector<int>> sample_dataset(
    const GroundTruth &truth, Index n, std::uint64_t seed) {
  const Index k = truth.k();
  const Index q = truth.q();
  const Index p = truth.p();
  Rng rng(seed, "data", 0);

  std::vector<math::SpdChol> chols;
  chols.reserve(k);
  for (Index kk = 0; kk < k; ++kk) chols.emplace_back(truth.sigma[kk]);

  MixedDataset data;
  data.x.resize(n, q);
  data.c.resize(n, p);
  data.cards = truth.cards;
  std::vector<int> labels(n);

  for (Index i = 0; i < n; ++i) {
    const Index zi = rng.categorical(truth.pi);
    labels[i] = static_cast<int>(zi) + 1;
    data.x.row(i) = rng.mv_normal(truth.mu[zi], chols[zi].lower()).transpose();
    for (Index j = 0; j < p; ++j) {
      const Vector probs = truth.psi[j].row(zi).transpose();
      data.c(i, j) = static_cast<int>(rng.categorical(probs)) + 1;
    }
  }
  return {std::move(data), std::move(labels)};
}

}  // namespace mixvi::sim
