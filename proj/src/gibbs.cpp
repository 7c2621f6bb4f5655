#include "mixvi/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mixvi/cavi.hpp"

namespace mixvi {

namespace {

double log_dirichlet_pdf(const Vector &x, const Vector &conc) {
  double lp = std::lgamma(conc.sum());
  for (Index i = 0; i < x.size(); ++i)
    lp += (conc[i] - 1.0) * std::log(x[i]) - std::lgamma(conc[i]);
  return lp;
}

double log_inverse_wishart_pdf(const Matrix &sigma, double nu,
                               const Matrix &phi) {
  const Index q = sigma.rows();
  const math::SpdChol chol_sigma(sigma);
  const math::SpdChol chol_phi(phi);
  const double trace = (chol_sigma.inverse() * phi).trace();
  return 0.5 * nu * chol_phi.logdet() - 0.5 * nu * q * std::numbers::ln2 -
         math::log_multigamma(static_cast<int>(q), 0.5 * nu) -
         0.5 * (nu + q + 1.0) * chol_sigma.logdet() - 0.5 * trace;
}

}  // namespace

MixtureDensity::MixtureDensity(const Vector &pi, const std::vector<Vector> &mu,
                               const std::vector<Matrix> &sigma,
                               const std::vector<Matrix> &psi)
    : mu_(mu) {
  const Index k = pi.size();
  log_pi_ = pi.array().log();
  logdet_.resize(k);
  chol_.reserve(k);
  for (Index kk = 0; kk < k; ++kk) {
    chol_.emplace_back(sigma[kk]);
    logdet_[kk] = chol_[kk].logdet();
  }
  log_psi_.reserve(psi.size());
  for (const auto &m : psi) log_psi_.push_back(m.array().log());
}

MixtureDensity::MixtureDensity(const GroundTruth &truth)
    : MixtureDensity(truth.pi, truth.mu, truth.sigma, truth.psi) {}

void MixtureDensity::component_log_weights(
    const Vector &x, const Eigen::Ref<const IntVector> &codes,
    std::vector<double> &out) const {
  const Index k = this->k();
  const Index q = x.size();
  out.resize(k);
  for (Index kk = 0; kk < k; ++kk) {
    double lw = log_pi_[kk] - 0.5 * q * std::log(2.0 * std::numbers::pi) -
                0.5 * logdet_[kk] -
                0.5 * chol_[kk].quadratic_form(x - mu_[kk]);
    for (std::size_t j = 0; j < log_psi_.size(); ++j)
      lw += log_psi_[j](kk, codes[static_cast<Index>(j)] - 1);
    out[kk] = lw;
  }
}

double MixtureDensity::logpdf(const Vector &x,
                              const Eigen::Ref<const IntVector> &codes) const {
  std::vector<double> lw;
  component_log_weights(x, codes, lw);
  return math::log_sum_exp(lw);
}

NiwParams niw_conditional(const MixedDataset &data, const std::vector<int> &z,
                          int component, const PriorHyperparameters &priors) {
  const Index q = data.q();
  Index nk = 0;
  Vector sum = Vector::Zero(q);
  for (Index i = 0; i < data.n(); ++i)
    if (z[i] == component + 1) {
      ++nk;
      sum += data.x.row(i).transpose();
    }

  NiwParams post;
  post.beta = priors.beta + static_cast<double>(nk);
  post.nu = priors.nu + static_cast<double>(nk);
  if (nk == 0) {
    post.m = priors.m[component];
    post.phi = priors.phi;
    return post;
  }
  const Vector xbar = sum / static_cast<double>(nk);
  post.m = (priors.beta * priors.m[component] + sum) / post.beta;
  Matrix scatter = Matrix::Zero(q, q);
  for (Index i = 0; i < data.n(); ++i)
    if (z[i] == component + 1) {
      const Vector d = data.x.row(i).transpose() - xbar;
      scatter.noalias() += d * d.transpose();
    }
  const Vector dm = xbar - priors.m[component];
  post.phi = priors.phi + scatter +
             (priors.beta * nk / post.beta) * (dm * dm.transpose());
  post.phi = 0.5 * (post.phi + post.phi.transpose());
  return post;
}

Vector psi_conditional(const MixedDataset &data, const std::vector<int> &z,
                       int component, Index column,
                       const PriorHyperparameters &priors) {
  Vector conc = Vector::Constant(data.cards[column], priors.eta[column]);
  for (Index i = 0; i < data.n(); ++i)
    if (z[i] == component + 1) conc[data.c(i, column) - 1] += 1.0;
  return conc;
}

Vector pi_conditional(const std::vector<int> &z, int k,
                      const PriorHyperparameters &priors) {
  Vector conc = Vector::Constant(k, priors.alpha);
  for (int zi : z) conc[zi - 1] += 1.0;
  return conc;
}

namespace {

void update_parameters(GibbsState &state, const MixedDataset &data,
                       const PriorHyperparameters &priors, Rng &rng) {
  const int k = priors.k;
  const Index p = data.p();

  state.psi.resize(p);
  for (Index j = 0; j < p; ++j) {
    Matrix psi(k, data.cards[j]);
    for (int kk = 0; kk < k; ++kk)
      psi.row(kk) =
          rng.dirichlet(psi_conditional(data, state.z, kk, j, priors))
              .transpose();
    state.psi[j] = std::move(psi);
  }

  state.mu.resize(k);
  state.sigma.resize(k);
  for (int kk = 0; kk < k; ++kk) {
    const NiwParams post = niw_conditional(data, state.z, kk, priors);
    // Sigma ~ IW(nu, phi) through Lambda ~ W(nu, phi^{-1})
    const Matrix phi_inv = math::SpdChol(post.phi).inverse();
    const Matrix lambda =
        rng.wishart(post.nu, math::SpdChol(phi_inv).lower());
    state.sigma[kk] = math::SpdChol(lambda).inverse();
    state.sigma[kk] = 0.5 * (state.sigma[kk] + state.sigma[kk].transpose());
    state.mu[kk] = rng.mv_normal(
        post.m, math::SpdChol(state.sigma[kk] / post.beta).lower());
  }

  state.pi = rng.dirichlet(pi_conditional(state.z, k, priors));
}

void update_labels(GibbsState &state, const MixedDataset &data,
                   const PriorHyperparameters &priors, Rng &rng) {
  (void)priors;
  const MixtureDensity density(state.pi, state.mu, state.sigma, state.psi);
  std::vector<double> lw;
  Vector w(density.k());
  for (Index i = 0; i < data.n(); ++i) {
    density.component_log_weights(data.x.row(i).transpose(), data.c.row(i),
                                  lw);
    const double m = *std::max_element(lw.begin(), lw.end());
    for (Index kk = 0; kk < density.k(); ++kk) w[kk] = std::exp(lw[kk] - m);
    state.z[i] = static_cast<int>(rng.categorical(w)) + 1;
  }
}

}  // namespace

void gibbs_sweep(GibbsState &state, const MixedDataset &data,
                 const PriorHyperparameters &priors, Rng &rng) {
  update_labels(state, data, priors, rng);
  update_parameters(state, data, priors, rng);
}

ChainSummary run_chain(const MixedDataset &data,
                       const PriorHyperparameters &priors,
                       const ChainConfig &config) {
  if (config.sweeps <= config.burn_in)
    throw std::invalid_argument("run_chain: sweeps must exceed burn_in");
  const int k = priors.k;
  const Index q = data.q(), p = data.p();
  Rng rng(config.seed, "gibbs", 0);

  GibbsState state;
  const auto labels = kprototypes_labels(data, k, config.seed);
  state.z.resize(data.n());
  for (Index i = 0; i < data.n(); ++i)
    state.z[i] = static_cast<int>(labels[i]) + 1;
  update_parameters(state, data, priors, rng);

  ChainSummary summary;
  summary.sweeps = config.sweeps;
  summary.burn_in = config.burn_in;
  summary.mean_pi = Vector::Zero(k);
  summary.mean_mu.assign(k, Vector::Zero(q));
  summary.mean_sigma.assign(k, Matrix::Zero(q, q));
  summary.mean_psi.resize(p);
  for (Index j = 0; j < p; ++j)
    summary.mean_psi[j] = Matrix::Zero(k, data.cards[j]);

  for (Index sweep = 0; sweep < config.sweeps; ++sweep) {
    gibbs_sweep(state, data, priors, rng);
    if (sweep < config.burn_in) continue;
    ++summary.retained;
    summary.mean_pi += state.pi;
    for (int kk = 0; kk < k; ++kk) {
      summary.mean_mu[kk] += state.mu[kk];
      summary.mean_sigma[kk] += state.sigma[kk];
    }
    for (Index j = 0; j < p; ++j) summary.mean_psi[j] += state.psi[j];
    if (config.store_log_joint)
      summary.log_joint.push_back(log_joint_density(
          data, priors, state.pi, state.mu, state.sigma, state.psi));
    if (config.thin > 0 &&
        (sweep - config.burn_in) % config.thin == 0)
      summary.thinned.push_back(state);
  }

  const double denom = static_cast<double>(summary.retained);
  summary.mean_pi /= denom;
  for (int kk = 0; kk < k; ++kk) {
    summary.mean_mu[kk] /= denom;
    summary.mean_sigma[kk] /= denom;
  }
  for (Index j = 0; j < p; ++j) summary.mean_psi[j] /= denom;
  summary.last_z = state.z;
  return summary;
}

double log_joint_density(const MixedDataset &data,
                         const PriorHyperparameters &priors, const Vector &pi,
                         const std::vector<Vector> &mu,
                         const std::vector<Matrix> &sigma,
                         const std::vector<Matrix> &psi) {
  const Index q = data.q(), p = data.p();
  const int k = priors.k;
  const MixtureDensity density(pi, mu, sigma, psi);

  double total = 0.0;
  for (Index i = 0; i < data.n(); ++i)
    total += density.logpdf(data.x.row(i).transpose(), data.c.row(i));

  total += log_dirichlet_pdf(pi, Vector::Constant(k, priors.alpha));
  for (int kk = 0; kk < k; ++kk) {
    const math::SpdChol chol(sigma[kk]);
    const Vector dm = mu[kk] - priors.m[kk];
    total += -0.5 * q * std::log(2.0 * std::numbers::pi) +
             0.5 * q * std::log(priors.beta) - 0.5 * chol.logdet() -
             0.5 * priors.beta * chol.quadratic_form(dm);
    total += log_inverse_wishart_pdf(sigma[kk], priors.nu, priors.phi);
  }
  for (Index j = 0; j < p; ++j) {
    const Vector prior_conc = Vector::Constant(data.cards[j], priors.eta[j]);
    for (int kk = 0; kk < k; ++kk)
      total += log_dirichlet_pdf(psi[j].row(kk).transpose(), prior_conc);
  }
  return total;
}

}  // namespace mixvi
