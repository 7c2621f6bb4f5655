#include "mixvi/cavi.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "mixvi/math.hpp"
#include "mixvi/rng.hpp"

namespace mixvi {

namespace {

using math::digamma;
using math::perm_invariant_sum;
using math::SpdChol;

constexpr Index kRowBlock = 1024;

int resolve_threads(int requested, Index n) {
  if (requested <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    requested = hw == 0 ? 1 : static_cast<int>(hw);
  }
  const Index blocks = (n + kRowBlock - 1) / kRowBlock;
  return static_cast<int>(std::min<Index>(requested, std::max<Index>(blocks, 1)));
}

// Runs fn(block_begin, block_end) over fixed-size row blocks. Block
// boundaries are independent of the thread count, so any per-block output
// is bitwise reproducible under any parallelism.
template <typename Fn>
void for_each_block(Index n, int threads, Fn &&fn) {
  const Index blocks = (n + kRowBlock - 1) / kRowBlock;
  if (threads <= 1 || blocks <= 1) {
    for (Index b = 0; b < blocks; ++b)
      fn(b, b * kRowBlock, std::min(n, (b + 1) * kRowBlock));
    return;
  }
  std::atomic<Index> next{0};
  auto worker = [&] {
    for (;;) {
      const Index b = next.fetch_add(1);
      if (b >= blocks) return;
      fn(b, b * kRowBlock, std::min(n, (b + 1) * kRowBlock));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &th : pool) th.join();
}

// Weighted sufficient statistics of one responsibility column block.
struct SuffStats {
  Vector s;                  // K: sum of weights
  Matrix sx;                 // q x K: weighted data sums
  std::vector<Matrix> sxx;   // K outer-product sums

  static SuffStats zero(Index k, Index q) {
    SuffStats st;
    st.s = Vector::Zero(k);
    st.sx = Matrix::Zero(q, k);
    st.sxx.assign(k, Matrix::Zero(q, q));
    return st;
  }
  void merge(const SuffStats &other) {
    s += other.s;
    sx += other.sx;
    for (std::size_t k = 0; k < sxx.size(); ++k) sxx[k] += other.sxx[k];
  }
};

// Block partials combined pairwise in fixed order, so the reduction is
// reproducible and independent of scheduling.
SuffStats reduce_pairwise(std::vector<SuffStats> parts) {
  while (parts.size() > 1) {
    std::vector<SuffStats> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      parts[i].merge(parts[i + 1]);
      next.push_back(std::move(parts[i]));
    }
    if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

SuffStats weighted_sufficient_stats(const MixedDataset &data,
                                    const Matrix &resp) {
  const Index n = data.n(), q = data.q(), k = resp.cols();
  const Index blocks = std::max<Index>((n + kRowBlock - 1) / kRowBlock, 1);
  std::vector<SuffStats> parts(blocks, SuffStats::zero(k, q));
  for_each_block(n, 1, [&](Index b, Index lo, Index hi) {
    SuffStats &st = parts[b];
    for (Index i = lo; i < hi; ++i) {
      const Vector xi = data.x.row(i).transpose();
      for (Index kk = 0; kk < k; ++kk) {
        const double r = resp(i, kk);
        st.s[kk] += r;
        st.sx.col(kk) += r * xi;
        st.sxx[kk].noalias() += r * (xi * xi.transpose());
      }
    }
  });
  return reduce_pairwise(std::move(parts));
}

// Per-component expectations used by the local update and the ELBO.
struct Expectations {
  Vector elogdet;               // E[ln det Lambda_k]
  Vector elogpi;                // E[ln pi_k]
  Vector sumdig;                // sum_d digamma((nu_hat + 1 - d)/2)
  std::vector<Matrix> elogpsi;  // p matrices, K x d_j
  std::vector<SpdChol> chol;    // Cholesky of each phi_hat
};

Expectations make_expectations(const VariationalParameters &vp, Index q,
                               Index p) {
  const Index k = vp.k();
  Expectations e;
  e.elogdet.resize(k);
  e.sumdig.resize(k);
  e.chol.reserve(k);
  for (Index kk = 0; kk < k; ++kk) {
    e.chol.emplace_back(vp.phi_hat[kk]);
    double sd = 0.0;
    for (Index d = 1; d <= q; ++d)
      sd += digamma(0.5 * (vp.nu_hat[kk] + 1.0 - d));
    e.sumdig[kk] = sd;
    e.elogdet[kk] = q * std::numbers::ln2 - e.chol[kk].logdet() + sd;
  }
  const double alpha_total = perm_invariant_sum(
      {vp.alpha_hat.data(), static_cast<std::size_t>(k)});
  const double dig_total = digamma(alpha_total);
  e.elogpi.resize(k);
  for (Index kk = 0; kk < k; ++kk)
    e.elogpi[kk] = digamma(vp.alpha_hat[kk]) - dig_total;
  e.elogpsi.reserve(p);
  for (Index j = 0; j < p; ++j) {
    const Matrix &eta = vp.eta_hat[j];
    Matrix lp(eta.rows(), eta.cols());
    for (Index kk = 0; kk < eta.rows(); ++kk) {
      const double dig_row = digamma(eta.row(kk).sum());
      for (Index g = 0; g < eta.cols(); ++g)
        lp(kk, g) = digamma(eta(kk, g)) - dig_row;
    }
    e.elogpsi.push_back(std::move(lp));
  }
  return e;
}

// Responsibilities from the expectation terms; elogpi can be overridden
// (the damped diagnostic map uses the digamma(K alpha + n) denominator).
Matrix local_responsibilities(const MixedDataset &data,
                              const VariationalParameters &vp,
                              const Expectations &e, int threads) {
  const Index n = data.n(), q = data.q(), p = data.p(), k = vp.k();
  Matrix resp(n, k);
  std::vector<double> base(k);
  for (Index kk = 0; kk < k; ++kk)
    base[kk] = -0.5 * q * std::log(2.0 * std::numbers::pi) +
               0.5 * e.elogdet[kk] - 0.5 * q / vp.beta_hat[kk] +
               e.elogpi[kk];

  for_each_block(n, threads, [&](Index, Index lo, Index hi) {
    std::vector<double> lnrho(k), ex(k);
    for (Index i = lo; i < hi; ++i) {
      const Vector xi = data.x.row(i).transpose();
      for (Index kk = 0; kk < k; ++kk) {
        double v = base[kk] -
                   0.5 * vp.nu_hat[kk] *
                       e.chol[kk].quadratic_form(xi - vp.m_hat[kk]);
        for (Index j = 0; j < p; ++j)
          v += e.elogpsi[j](kk, data.c(i, j) - 1);
        lnrho[kk] = v;
      }
      const double m = *std::max_element(lnrho.begin(), lnrho.end());
      if (!std::isfinite(m))
        throw std::runtime_error(
            "update_local: non-finite responsibility weight at row " +
            std::to_string(i));
      for (Index kk = 0; kk < k; ++kk) ex[kk] = std::exp(lnrho[kk] - m);
      const double total = perm_invariant_sum(ex);
      for (Index kk = 0; kk < k; ++kk) resp(i, kk) = ex[kk] / total;
    }
  });
  return resp;
}

double dirichlet_log_beta(const Vector &conc) {
  double lg = 0.0;
  for (Index i = 0; i < conc.size(); ++i) lg += std::lgamma(conc[i]);
  return lg - std::lgamma(conc.sum());
}

}  // namespace

std::vector<Index> kprototypes_labels(const MixedDataset &data, int k,
                                      std::uint64_t seed) {
  const Index n = data.n(), q = data.q(), p = data.p();
  if (k < 1) throw std::invalid_argument("kprototypes: K must be >= 1");
  if (n < k)
    throw std::invalid_argument("kprototypes: need at least K data points");

  // categorical mismatch weight: mean continuous column variance
  double gamma = 1.0;
  if (q > 0 && n > 1) {
    double total = 0.0;
    for (Index j = 0; j < q; ++j) {
      const double mean = data.x.col(j).mean();
      total += (data.x.col(j).array() - mean).square().sum() /
               static_cast<double>(n - 1);
    }
    gamma = total / static_cast<double>(q);
  }

  constexpr int kRestarts = 10;
  constexpr int kMaxIters = 100;
  std::vector<Index> best_labels;
  double best_cost = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < kRestarts; ++restart) {
    Rng rng(seed, "kprototypes", static_cast<std::uint64_t>(restart));
    // distinct random rows as initial prototypes
    std::vector<Index> centers;
    while (static_cast<int>(centers.size()) < k) {
      const Index cand = static_cast<Index>(rng.uniform_int(n));
      if (std::find(centers.begin(), centers.end(), cand) == centers.end())
        centers.push_back(cand);
    }
    Matrix proto_x(k, q);
    IntMatrix proto_c(k, p);
    for (int kk = 0; kk < k; ++kk) {
      proto_x.row(kk) = data.x.row(centers[kk]);
      proto_c.row(kk) = data.c.row(centers[kk]);
    }

    std::vector<Index> labels(n, -1);
    std::vector<double> point_cost(n, 0.0);
    double cost = 0.0;
    for (int iter = 0; iter < kMaxIters; ++iter) {
      bool changed = false;
      cost = 0.0;
      for (Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        Index best_k = 0;
        for (int kk = 0; kk < k; ++kk) {
          double d = (data.x.row(i) - proto_x.row(kk)).squaredNorm();
          for (Index j = 0; j < p; ++j)
            if (data.c(i, j) != proto_c(kk, j)) d += gamma;
          if (d < best) {
            best = d;
            best_k = kk;
          }
        }
        if (labels[i] != best_k) changed = true;
        labels[i] = best_k;
        point_cost[i] = best;
        cost += best;
      }
      if (!changed && iter > 0) break;

      // recompute prototypes: continuous means and categorical modes
      for (int kk = 0; kk < k; ++kk) {
        Vector mean = Vector::Zero(q);
        Index count = 0;
        for (Index i = 0; i < n; ++i)
          if (labels[i] == kk) {
            mean += data.x.row(i).transpose();
            ++count;
          }
        if (count == 0) {
          // reseed an empty cluster at the worst-fitted point
          Index worst = 0;
          for (Index i = 1; i < n; ++i)
            if (point_cost[i] > point_cost[worst]) worst = i;
          proto_x.row(kk) = data.x.row(worst);
          proto_c.row(kk) = data.c.row(worst);
          point_cost[worst] = 0.0;
          continue;
        }
        proto_x.row(kk) = mean.transpose() / static_cast<double>(count);
        for (Index j = 0; j < p; ++j) {
          std::vector<Index> tally(data.cards[j], 0);
          for (Index i = 0; i < n; ++i)
            if (labels[i] == kk) ++tally[data.c(i, j) - 1];
          proto_c(kk, j) = static_cast<int>(
              std::max_element(tally.begin(), tally.end()) - tally.begin() + 1);
        }
      }
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_labels = std::move(labels);
    }
  }
  return best_labels;
}

Matrix init_kprototypes(const MixedDataset &data, int k, std::uint64_t seed) {
  const auto labels = kprototypes_labels(data, k, seed);
  Matrix resp = Matrix::Constant(data.n(), k, 0.1);
  for (Index i = 0; i < data.n(); ++i) resp(i, labels[i]) = 0.9;
  return resp;
}

VariationalParameters update_global(const MixedDataset &data,
                                    const PriorHyperparameters &priors,
                                    const Matrix &resp) {
  const Index n = data.n(), q = data.q(), p = data.p();
  const Index k = priors.k;
  if (resp.rows() != n || resp.cols() != k)
    throw std::invalid_argument("update_global: responsibility shape mismatch");
  if (!resp.allFinite() || (resp.array() < 0.0).any())
    throw std::invalid_argument(
        "update_global: responsibilities must be finite and nonnegative");

  const SuffStats stats = weighted_sufficient_stats(data, resp);

  VariationalParameters vp;
  vp.alpha_hat = priors.alpha + stats.s.array();
  vp.beta_hat = priors.beta + stats.s.array();
  vp.nu_hat = priors.nu + stats.s.array();
  vp.m_hat.resize(k);
  vp.phi_hat.resize(k);
  for (Index kk = 0; kk < k; ++kk) {
    vp.m_hat[kk] =
        (priors.beta * priors.m[kk] + stats.sx.col(kk)) / vp.beta_hat[kk];
    Matrix phi = priors.phi -
                 vp.beta_hat[kk] * vp.m_hat[kk] * vp.m_hat[kk].transpose() +
                 priors.beta * priors.m[kk] * priors.m[kk].transpose() +
                 stats.sxx[kk];
    phi = 0.5 * (phi + phi.transpose());  // remove rounding asymmetry
    try {
      SpdChol check(phi);
    } catch (const NotPositiveDefiniteError &) {
      throw NotPositiveDefiniteError(
          "update_global: degenerate scale matrix for component " +
          std::to_string(kk));
    }
    vp.phi_hat[kk] = std::move(phi);
  }

  vp.eta_hat.resize(p);
  for (Index j = 0; j < p; ++j) {
    Matrix eta = Matrix::Constant(k, data.cards[j], priors.eta[j]);
    for (Index i = 0; i < n; ++i) {
      const Index g = data.c(i, j) - 1;
      for (Index kk = 0; kk < k; ++kk) eta(kk, g) += resp(i, kk);
    }
    vp.eta_hat[j] = std::move(eta);
  }
  vp.resp = resp;
  return vp;
}

Matrix update_local(const MixedDataset &data, const VariationalParameters &vp,
                    const PriorHyperparameters &priors, int threads) {
  (void)priors;  // expectations depend only on the variational state
  const Expectations e = make_expectations(vp, data.q(), data.p());
  return local_responsibilities(data, vp, e,
                                resolve_threads(threads, data.n()));
}

double compute_elbo(const MixedDataset &data,
                    const PriorHyperparameters &priors,
                    const VariationalParameters &vp, ElboForm form) {
  const Index n = data.n(), q = data.q(), p = data.p(), k = vp.k();
  const Expectations e = make_expectations(vp, q, p);
  const double ln2pi = std::log(2.0 * std::numbers::pi);

  // responsibility column sums, reduced independently of component order
  Vector col_sum(k);
  for (Index kk = 0; kk < k; ++kk) {
    const Vector col = vp.resp.col(kk);
    col_sum[kk] = math::pairwise_sum(
        {col.data(), static_cast<std::size_t>(col.size())});
  }

  // Data terms shared by both forms: E[ln p(x|.)], E[ln p(c|.)],
  // E[ln p(z|pi)] and the entropy of q(z).
  std::vector<double> perk(k);
  double data_terms = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Vector xi = data.x.row(i).transpose();
    for (Index kk = 0; kk < k; ++kk) {
      const double r = vp.resp(i, kk);
      double v = 0.0;
      if (r > 0.0) {
        const double elogn =
            -0.5 * q * ln2pi + 0.5 * e.elogdet[kk] -
            0.5 * (vp.nu_hat[kk] *
                       e.chol[kk].quadratic_form(xi - vp.m_hat[kk]) +
                   q / vp.beta_hat[kk]);
        double elogc = 0.0;
        for (Index j = 0; j < p; ++j)
          elogc += e.elogpsi[j](kk, data.c(i, j) - 1);
        v = r * (elogn + elogc) - r * std::log(r);
      }
      perk[kk] = v;
    }
    data_terms += perm_invariant_sum(perk);
  }
  {
    std::vector<double> zterm(k);
    for (Index kk = 0; kk < k; ++kk) zterm[kk] = col_sum[kk] * e.elogpi[kk];
    data_terms += perm_invariant_sum(zterm);
  }

  const double alpha_total = perm_invariant_sum(
      {vp.alpha_hat.data(), static_cast<std::size_t>(k)});

  if (form == ElboForm::kKlPaired) {
    // KL(q(mu|Lambda) || p(mu|Lambda)), expected over q(Lambda)
    std::vector<double> kl_mu(k), kl_lambda(k);
    const double logdet_phi0 = SpdChol(priors.phi).logdet();
    const double lgq_prior = math::log_multigamma(static_cast<int>(q),
                                                  0.5 * priors.nu);
    for (Index kk = 0; kk < k; ++kk) {
      const Vector dm = vp.m_hat[kk] - priors.m[kk];
      kl_mu[kk] = 0.5 * (q * std::log(vp.beta_hat[kk] / priors.beta) - q +
                         priors.beta * vp.nu_hat[kk] *
                             e.chol[kk].quadratic_form(dm) +
                         q * priors.beta / vp.beta_hat[kk]);
      const double trace =
          (e.chol[kk].inverse() * priors.phi).trace();
      kl_lambda[kk] =
          0.5 * (priors.nu * (e.chol[kk].logdet() - logdet_phi0) +
                 vp.nu_hat[kk] * trace + 2.0 * lgq_prior -
                 2.0 * math::log_multigamma(static_cast<int>(q),
                                            0.5 * vp.nu_hat[kk]) +
                 (vp.nu_hat[kk] - priors.nu) * e.sumdig[kk] -
                 vp.nu_hat[kk] * q);
    }

    // KL(q(pi) || p(pi))
    std::vector<double> kl_pi_terms(k);
    for (Index kk = 0; kk < k; ++kk)
      kl_pi_terms[kk] = -std::lgamma(vp.alpha_hat[kk]) +
                        std::lgamma(priors.alpha) +
                        (vp.alpha_hat[kk] - priors.alpha) *
                            (digamma(vp.alpha_hat[kk]) - digamma(alpha_total));
    const double kl_pi = std::lgamma(alpha_total) -
                         std::lgamma(k * priors.alpha) +
                         perm_invariant_sum(kl_pi_terms);

    // KL(q(psi) || p(psi))
    std::vector<double> kl_psi_terms(k, 0.0);
    for (Index kk = 0; kk < k; ++kk) {
      double acc = 0.0;
      for (Index j = 0; j < p; ++j) {
        const Index d = data.cards[j];
        const Vector eta_row = vp.eta_hat[j].row(kk).transpose();
        const double eta_total = eta_row.sum();
        acc += std::lgamma(eta_total) - std::lgamma(d * priors.eta[j]);
        const double dig_total = digamma(eta_total);
        for (Index g = 0; g < d; ++g)
          acc += std::lgamma(priors.eta[j]) - std::lgamma(eta_row[g]) +
                 (eta_row[g] - priors.eta[j]) *
                     (digamma(eta_row[g]) - dig_total);
      }
      kl_psi_terms[kk] = acc;
    }

    return data_terms - perm_invariant_sum(kl_mu) -
           perm_invariant_sum(kl_lambda) - kl_pi -
           perm_invariant_sum(kl_psi_terms);
  }

  // Direct eleven-term form. The data contributions and the entropy of
  // q(z) are in data_terms already; the remaining terms are the prior
  // expectations minus the entropies of the global factors.
  const double logdet_phi0 = SpdChol(priors.phi).logdet();
  std::vector<double> terms(k);
  double total = data_terms;

  for (Index kk = 0; kk < k; ++kk) {
    const Vector dm = vp.m_hat[kk] - priors.m[kk];
    // E[ln p(mu|Lambda)]
    const double t2 = -0.5 * q * ln2pi + 0.5 * q * std::log(priors.beta) +
                      0.5 * e.elogdet[kk] -
                      0.5 * q * priors.beta / vp.beta_hat[kk] -
                      0.5 * priors.beta * vp.nu_hat[kk] *
                          e.chol[kk].quadratic_form(dm);
    // E[ln p(Lambda)]
    const double t3 =
        0.5 * (priors.nu - q - 1.0) * e.elogdet[kk] -
        0.5 * vp.nu_hat[kk] * (e.chol[kk].inverse() * priors.phi).trace() -
        0.5 * priors.nu * q * std::numbers::ln2 + 0.5 * priors.nu * logdet_phi0 -
        math::log_multigamma(static_cast<int>(q), 0.5 * priors.nu);
    // E[ln q(mu|Lambda)]
    const double t8a = -0.5 * q * ln2pi +
                       0.5 * q * std::log(vp.beta_hat[kk]) +
                       0.5 * e.elogdet[kk] - 0.5 * q;
    // E[ln q(Lambda)]
    const double t8b =
        0.5 * (vp.nu_hat[kk] - q - 1.0) * e.elogdet[kk] -
        0.5 * vp.nu_hat[kk] * q - 0.5 * vp.nu_hat[kk] * q * std::numbers::ln2 +
        0.5 * vp.nu_hat[kk] * e.chol[kk].logdet() -
        math::log_multigamma(static_cast<int>(q), 0.5 * vp.nu_hat[kk]);
    terms[kk] = t2 + t3 - t8a - t8b;
  }
  total += perm_invariant_sum(terms);

  // pi block: E[ln p(pi)] - E[ln q(pi)]
  for (Index kk = 0; kk < k; ++kk)
    terms[kk] = std::lgamma(vp.alpha_hat[kk]) - std::lgamma(priors.alpha) +
                (priors.alpha - vp.alpha_hat[kk]) *
                    (digamma(vp.alpha_hat[kk]) - digamma(alpha_total));
  total += std::lgamma(k * priors.alpha) - std::lgamma(alpha_total) +
           perm_invariant_sum(terms);

  // psi block: E[ln p(psi)] - E[ln q(psi)]
  for (Index kk = 0; kk < k; ++kk) {
    double acc = 0.0;
    for (Index j = 0; j < p; ++j) {
      const Index d = data.cards[j];
      const Vector eta_row = vp.eta_hat[j].row(kk).transpose();
      acc += -dirichlet_log_beta(Vector::Constant(d, priors.eta[j])) +
             dirichlet_log_beta(eta_row);
      const double dig_total = digamma(eta_row.sum());
      for (Index g = 0; g < d; ++g)
        acc += (priors.eta[j] - eta_row[g]) *
               (digamma(eta_row[g]) - dig_total);
    }
    terms[kk] = acc;
  }
  total += perm_invariant_sum(terms);
  return total;
}

FitResult fit_from_responsibilities(const MixedDataset &data,
                                    const PriorHyperparameters &priors,
                                    const Matrix &resp0,
                                    const FitConfig &config) {
  FitResult result;
  Matrix resp = resp0;
  const int threads = resolve_threads(config.threads, data.n());

  for (Index sweep = 0; sweep < config.max_sweeps; ++sweep) {
    result.vp = update_global(data, priors, resp);
    resp = update_local(data, result.vp, priors, threads);
    result.vp.resp = resp;
    const double elbo = compute_elbo(data, priors, result.vp);
    result.trace.values.push_back(elbo);
    if (sweep > 0) {
      const double prev = result.trace.values[sweep - 1];
      if (std::fabs(elbo - prev) < config.tol * (1.0 + std::fabs(elbo))) {
        result.trace.converged_at = sweep;
        break;
      }
    }
  }
  // refresh hyperparameters against the final responsibilities so the
  // returned state is self-consistent
  result.vp = update_global(data, priors, resp);
  return result;
}

FitResult fit(const MixedDataset &data, const PriorHyperparameters &priors,
              const FitConfig &config) {
  Matrix resp0;
  if (config.init == InitMethod::kKPrototypes) {
    resp0 = init_kprototypes(data, priors.k, config.seed);
  } else {
    Rng rng(config.seed, "init_random", 0);
    resp0.resize(data.n(), priors.k);
    for (Index i = 0; i < data.n(); ++i)
      resp0.row(i) =
          rng.dirichlet(Vector::Ones(priors.k)).transpose();
  }
  return fit_from_responsibilities(data, priors, resp0, config);
}

SimplifiedEstimates simplified_estimates(const MixedDataset &data,
                                         const VariationalParameters &vp,
                                         const PriorHyperparameters &priors) {
  const Index n = data.n(), q = data.q(), p = data.p(), k = vp.k();
  SimplifiedEstimates theta;
  theta.pi_hat.resize(k);
  theta.mu_hat.resize(k);
  theta.lambda_hat.resize(k);

  Vector s(k);
  for (Index kk = 0; kk < k; ++kk) {
    const Vector col = vp.resp.col(kk);
    s[kk] = math::pairwise_sum(
        {col.data(), static_cast<std::size_t>(col.size())});
    if (!(s[kk] > 1e-12))
      throw EmptyComponentError("simplified_estimates: component " +
                                std::to_string(kk) + " has no mass");
    theta.pi_hat[kk] = s[kk] / static_cast<double>(n);
  }

  // reconstruction identities tie the state to its responsibilities
  for (Index kk = 0; kk < k; ++kk) {
    const double expected = n * theta.pi_hat[kk];
    auto close = [&](double actual, double base) {
      return std::fabs(actual - (base + expected)) <=
             1e-8 * (1.0 + std::fabs(actual));
    };
    if (!close(vp.alpha_hat[kk], priors.alpha) ||
        !close(vp.beta_hat[kk], priors.beta) ||
        !close(vp.nu_hat[kk], priors.nu))
      throw std::invalid_argument(
          "simplified_estimates: state hyperparameters are inconsistent with "
          "its responsibilities (component " +
          std::to_string(kk) + ")");
  }

  for (Index kk = 0; kk < k; ++kk) {
    Vector mean = Vector::Zero(q);
    for (Index i = 0; i < n; ++i)
      mean += vp.resp(i, kk) * data.x.row(i).transpose();
    mean /= s[kk];
    Matrix scatter = Matrix::Zero(q, q);
    for (Index i = 0; i < n; ++i) {
      const Vector d = data.x.row(i).transpose() - mean;
      scatter.noalias() += vp.resp(i, kk) * (d * d.transpose());
    }
    theta.mu_hat[kk] = std::move(mean);
    theta.lambda_hat[kk] = s[kk] * SpdChol(scatter).inverse();
  }

  theta.psi_hat.resize(p);
  for (Index j = 0; j < p; ++j) {
    Matrix counts = Matrix::Zero(k, data.cards[j]);
    for (Index i = 0; i < n; ++i) {
      const Index g = data.c(i, j) - 1;
      for (Index kk = 0; kk < k; ++kk) counts(kk, g) += vp.resp(i, kk);
    }
    theta.psi_hat[j] = counts.array().colwise() / s.array();
  }
  return theta;
}

VariationalParameters simplified_to_variational(
    const SimplifiedEstimates &theta, const PriorHyperparameters &priors,
    Index n) {
  const Index k = theta.k();
  VariationalParameters vp;
  vp.alpha_hat.resize(k);
  vp.beta_hat.resize(k);
  vp.nu_hat.resize(k);
  vp.m_hat.resize(k);
  vp.phi_hat.resize(k);
  const double nd = static_cast<double>(n);
  for (Index kk = 0; kk < k; ++kk) {
    const double npi = nd * theta.pi_hat[kk];
    vp.alpha_hat[kk] = npi + priors.alpha;
    vp.beta_hat[kk] = npi + priors.beta;
    vp.nu_hat[kk] = npi + priors.nu;
    vp.m_hat[kk] =
        (npi * theta.mu_hat[kk] + priors.beta * priors.m[kk]) /
        (npi + priors.beta);
    const Vector dm = theta.mu_hat[kk] - priors.m[kk];
    Matrix phi = npi * SpdChol(theta.lambda_hat[kk]).inverse() +
                 npi / (npi + priors.beta) * priors.beta *
                     (dm * dm.transpose()) +
                 priors.phi;
    vp.phi_hat[kk] = 0.5 * (phi + phi.transpose());
  }
  vp.eta_hat.resize(theta.psi_hat.size());
  for (std::size_t j = 0; j < theta.psi_hat.size(); ++j) {
    Matrix eta =
        nd * (theta.psi_hat[j].array().colwise() * theta.pi_hat.array())
                 .matrix();
    eta.array() += priors.eta[static_cast<Index>(j)];
    vp.eta_hat[j] = std::move(eta);
  }
  return vp;
}

SimplifiedEstimates damped_iterate(const SimplifiedEstimates &theta,
                                   const MixedDataset &data,
                                   const PriorHyperparameters &priors,
                                   double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 2.0))
    throw std::invalid_argument("damped_iterate: epsilon must be in (0, 2)");
  const Index n = data.n(), q = data.q(), p = data.p(), k = theta.k();

  VariationalParameters vp = simplified_to_variational(theta, priors, n);
  Expectations e = make_expectations(vp, q, p);
  // theory variant of E[ln pi_k]: denominator digamma(K alpha + n)
  const double dig_total = digamma(k * priors.alpha + static_cast<double>(n));
  for (Index kk = 0; kk < k; ++kk)
    e.elogpi[kk] = digamma(vp.alpha_hat[kk]) - dig_total;

  const Matrix resp =
      local_responsibilities(data, vp, e, resolve_threads(1, n));

  // T(theta): simplified estimates recomputed from the new responsibilities
  SimplifiedEstimates mapped;
  mapped.pi_hat.resize(k);
  mapped.mu_hat.resize(k);
  mapped.lambda_hat.resize(k);
  Vector s(k);
  for (Index kk = 0; kk < k; ++kk) {
    s[kk] = resp.col(kk).sum();
    if (!(s[kk] > 1e-12))
      throw EmptyComponentError("damped_iterate: component " +
                                std::to_string(kk) + " lost all mass");
    mapped.pi_hat[kk] = s[kk] / static_cast<double>(n);
    Vector mean = Vector::Zero(q);
    for (Index i = 0; i < n; ++i)
      mean += resp(i, kk) * data.x.row(i).transpose();
    mean /= s[kk];
    Matrix scatter = Matrix::Zero(q, q);
    for (Index i = 0; i < n; ++i) {
      const Vector d = data.x.row(i).transpose() - mean;
      scatter.noalias() += resp(i, kk) * (d * d.transpose());
    }
    mapped.mu_hat[kk] = std::move(mean);
    mapped.lambda_hat[kk] = s[kk] * SpdChol(scatter).inverse();
  }
  mapped.psi_hat.resize(p);
  for (Index j = 0; j < p; ++j) {
    Matrix counts = Matrix::Zero(k, data.cards[j]);
    for (Index i = 0; i < n; ++i) {
      const Index g = data.c(i, j) - 1;
      for (Index kk = 0; kk < k; ++kk) counts(kk, g) += resp(i, kk);
    }
    mapped.psi_hat[j] = counts.array().colwise() / s.array();
  }

  // (1 - eps) Theta + eps T(Theta)
  SimplifiedEstimates out = mapped;
  const double keep = 1.0 - epsilon;
  for (Index kk = 0; kk < k; ++kk) {
    out.pi_hat[kk] = keep * theta.pi_hat[kk] + epsilon * mapped.pi_hat[kk];
    out.mu_hat[kk] = keep * theta.mu_hat[kk] + epsilon * mapped.mu_hat[kk];
    out.lambda_hat[kk] =
        keep * theta.lambda_hat[kk] + epsilon * mapped.lambda_hat[kk];
  }
  for (Index j = 0; j < p; ++j)
    out.psi_hat[j] = keep * theta.psi_hat[j] + epsilon * mapped.psi_hat[j];
  return out;
}

}  // namespace mixvi
