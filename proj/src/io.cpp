#include "mixvi/io.hpp"

#include <fstream>
#include <sstream>

#include "mixvi/predictive.hpp"

namespace mixvi::io {

namespace {

json vector_to_json(const Vector &v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json &value) {
  Vector v(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) v[static_cast<Index>(i)] = value[i];
  return v;
}

// matrices are serialized row-major
json matrix_to_json(const Matrix &m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

Matrix matrix_from_json(const json &value, Index rows, Index cols) {
  if (static_cast<Index>(value.size()) != rows * cols)
    throw std::invalid_argument("matrix entry count mismatch");
  Matrix m(rows, cols);
  std::size_t idx = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = value[idx++];
  return m;
}

// eta-style ragged tables are serialized [k][j][g]
json ragged_to_json(const std::vector<Matrix> &per_column, Index k) {
  json out = json::array();
  for (Index kk = 0; kk < k; ++kk) {
    json row = json::array();
    for (const auto &m : per_column)
      row.push_back(vector_to_json(m.row(kk).transpose()));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<Matrix> ragged_from_json(const json &value,
                                     const std::vector<int> &cards) {
  const Index k = static_cast<Index>(value.size());
  std::vector<Matrix> per_column(cards.size());
  for (std::size_t j = 0; j < cards.size(); ++j)
    per_column[j].resize(k, cards[j]);
  for (Index kk = 0; kk < k; ++kk)
    for (std::size_t j = 0; j < cards.size(); ++j)
      per_column[j].row(kk) = vector_from_json(value[kk][j]).transpose();
  return per_column;
}

}  // namespace

json to_json(const RunManifest &run) {
  return json{{"command", run.command},
              {"config_hash", run.config_hash},
              {"seed", run.seed},
              {"inputs", run.inputs},
              {"outputs", run.outputs},
              {"wall_clock_ms", run.wall_clock_ms},
              {"version", run.version}};
}

std::string config_hash(const json &config) {
  const std::string dump = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

void write_json(const std::filesystem::path &path, const json &value) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << value.dump(2) << "\n";
}

json read_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json value;
  in >> value;
  return value;
}

void write_dataset_csv(const std::filesystem::path &path,
                       const MixedDataset &data) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (Index j = 0; j < data.q(); ++j) {
    if (j > 0) out << ",";
    out << "f:x" << (j + 1);
  }
  for (Index j = 0; j < data.p(); ++j) {
    if (data.q() > 0 || j > 0) out << ",";
    out << "c:c" << (j + 1);
  }
  out << "\n";
  out.precision(17);
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.q(); ++j) {
      if (j > 0) out << ",";
      out << data.x(i, j);
    }
    for (Index j = 0; j < data.p(); ++j) {
      if (data.q() > 0 || j > 0) out << ",";
      out << data.c(i, j);
    }
    out << "\n";
  }
}

json dataset_manifest(const MixedDataset &data) {
  json columns = json::array();
  for (Index j = 0; j < data.q(); ++j)
    columns.push_back(
        {{"name", "x" + std::to_string(j + 1)}, {"kind", "cont"}});
  for (Index j = 0; j < data.p(); ++j)
    columns.push_back({{"name", "c" + std::to_string(j + 1)},
                       {"kind", "cat"},
                       {"card", data.cards[j]}});
  return json{{"columns", columns}};
}

MixedDataset read_dataset_csv(
    const std::filesystem::path &path,
    const std::optional<std::filesystem::path> &manifest_path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": missing header row");

  std::vector<bool> is_cont;
  std::vector<std::string> names;
  {
    std::stringstream header(line);
    std::string field;
    while (std::getline(header, field, ',')) {
      if (field.rfind("f:", 0) == 0) {
        is_cont.push_back(true);
      } else if (field.rfind("c:", 0) == 0) {
        is_cont.push_back(false);
      } else {
        throw std::runtime_error(path.string() + ": column '" + field +
                                 "' must be typed f:<name> or c:<name>");
      }
      names.push_back(field.substr(2));
    }
  }

  std::vector<std::vector<double>> cont_rows;
  std::vector<std::vector<int>> cat_rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<double> cont;
    std::vector<int> cat;
    std::size_t col = 0;
    while (std::getline(row, field, ',')) {
      if (col >= is_cont.size())
        throw std::runtime_error(path.string() + ": too many fields in row");
      if (is_cont[col])
        cont.push_back(std::stod(field));
      else
        cat.push_back(std::stoi(field));
      ++col;
    }
    if (col != is_cont.size())
      throw std::runtime_error(path.string() + ": too few fields in row");
    cont_rows.push_back(std::move(cont));
    cat_rows.push_back(std::move(cat));
  }

  MixedDataset data;
  const Index n = static_cast<Index>(cont_rows.size());
  const Index q = n > 0 ? static_cast<Index>(cont_rows.front().size()) : 0;
  const Index p = n > 0 ? static_cast<Index>(cat_rows.front().size()) : 0;
  data.x.resize(n, q);
  data.c.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < q; ++j) data.x(i, j) = cont_rows[i][j];
    for (Index j = 0; j < p; ++j) data.c(i, j) = cat_rows[i][j];
  }

  data.cards.assign(p, 0);
  if (manifest_path) {
    const json manifest = read_json(*manifest_path);
    Index cat_idx = 0;
    for (const auto &col : manifest.at("columns")) {
      if (col.at("kind") == "cat") {
        if (cat_idx >= p)
          throw std::runtime_error("manifest has more categorical columns "
                                   "than the CSV");
        data.cards[cat_idx++] = col.at("card");
      }
    }
    if (cat_idx != p)
      throw std::runtime_error(
          "manifest has fewer categorical columns than the CSV");
  } else {
    for (Index j = 0; j < p; ++j)
      data.cards[j] = n > 0 ? data.c.col(j).maxCoeff() : 0;
  }
  return data;
}

json truth_to_json(const GroundTruth &truth, const std::vector<int> *z) {
  const Index k = truth.k();
  const Index q = truth.q();
  json mu = json::array();
  json sigma = json::array();
  for (Index kk = 0; kk < k; ++kk) {
    mu.push_back(vector_to_json(truth.mu[kk]));
    sigma.push_back(matrix_to_json(truth.sigma[kk]));
  }
  json out{{"type", "ground_truth"},
           {"k", k},
           {"q", q},
           {"cards", truth.cards},
           {"pi", vector_to_json(truth.pi)},
           {"mu", mu},
           {"sigma", sigma},
           {"psi", ragged_to_json(truth.psi, k)}};
  if (z != nullptr)
    out["z"] = *z;
  else if (truth.z)
    out["z"] = *truth.z;
  return out;
}

GroundTruth truth_from_json(const json &value, std::vector<int> *z) {
  GroundTruth truth;
  const Index k = value.at("k");
  const Index q = value.at("q");
  truth.cards = value.at("cards").get<std::vector<int>>();
  truth.pi = vector_from_json(value.at("pi"));
  for (Index kk = 0; kk < k; ++kk) {
    truth.mu.push_back(vector_from_json(value.at("mu")[kk]));
    truth.sigma.push_back(matrix_from_json(value.at("sigma")[kk], q, q));
  }
  truth.psi = ragged_from_json(value.at("psi"), truth.cards);
  if (value.contains("z")) {
    truth.z = value.at("z").get<std::vector<int>>();
    if (z != nullptr) *z = *truth.z;
  }
  return truth;
}

json model_to_json(const VariationalParameters &vp,
                   const PriorHyperparameters &priors, const ElboTrace &trace,
                   const std::vector<int> &cards,
                   const std::optional<StandardizationTransform> &transform,
                   const json &config) {
  const Index k = vp.k();
  const Index q = vp.m_hat.empty() ? 0 : vp.m_hat.front().size();

  json prior_m = json::array();
  for (const auto &m : priors.m) prior_m.push_back(vector_to_json(m));

  json m_hat = json::array();
  json phi_hat = json::array();
  for (Index kk = 0; kk < k; ++kk) {
    m_hat.push_back(vector_to_json(vp.m_hat[kk]));
    phi_hat.push_back(matrix_to_json(vp.phi_hat[kk]));
  }

  json trace_json{{"values", trace.values}};
  if (trace.converged_at)
    trace_json["converged_at"] = *trace.converged_at;
  else
    trace_json["converged_at"] = nullptr;

  json out{{"type", "cavi_model"},
           {"k", k},
           {"q", q},
           {"p", static_cast<Index>(cards.size())},
           {"n", vp.resp.rows()},
           {"cards", cards},
           {"priors",
            {{"m", prior_m},
             {"beta", priors.beta},
             {"nu", priors.nu},
             {"phi", matrix_to_json(priors.phi)},
             {"alpha", priors.alpha},
             {"eta", vector_to_json(priors.eta)}}},
           {"alpha_hat", vector_to_json(vp.alpha_hat)},
           {"beta_hat", vector_to_json(vp.beta_hat)},
           {"nu_hat", vector_to_json(vp.nu_hat)},
           {"m_hat", m_hat},
           {"phi_hat", phi_hat},
           {"eta_hat", ragged_to_json(vp.eta_hat, k)},
           {"resp", matrix_to_json(vp.resp)},
           {"elbo_trace", trace_json},
           {"config", config}};
  if (transform)
    out["transform"] = {{"means", vector_to_json(transform->means)},
                        {"sds", vector_to_json(transform->sds)}};
  else
    out["transform"] = nullptr;
  return out;
}

LoadedModel model_from_json(const json &value) {
  if (value.value("type", "") != "cavi_model")
    throw std::invalid_argument("not a cavi_model JSON document");
  LoadedModel loaded;
  const Index k = value.at("k");
  const Index q = value.at("q");
  const Index n = value.at("n");
  loaded.cards = value.at("cards").get<std::vector<int>>();

  const json &priors = value.at("priors");
  loaded.priors.k = static_cast<int>(k);
  for (const auto &m : priors.at("m"))
    loaded.priors.m.push_back(vector_from_json(m));
  loaded.priors.beta = priors.at("beta");
  loaded.priors.nu = priors.at("nu");
  loaded.priors.phi = matrix_from_json(priors.at("phi"), q, q);
  loaded.priors.alpha = priors.at("alpha");
  loaded.priors.eta = vector_from_json(priors.at("eta"));

  loaded.vp.alpha_hat = vector_from_json(value.at("alpha_hat"));
  loaded.vp.beta_hat = vector_from_json(value.at("beta_hat"));
  loaded.vp.nu_hat = vector_from_json(value.at("nu_hat"));
  for (Index kk = 0; kk < k; ++kk) {
    loaded.vp.m_hat.push_back(vector_from_json(value.at("m_hat")[kk]));
    loaded.vp.phi_hat.push_back(
        matrix_from_json(value.at("phi_hat")[kk], q, q));
  }
  loaded.vp.eta_hat = ragged_from_json(value.at("eta_hat"), loaded.cards);
  loaded.vp.resp = matrix_from_json(value.at("resp"), n, k);

  loaded.trace.values =
      value.at("elbo_trace").at("values").get<std::vector<double>>();
  if (!value.at("elbo_trace").at("converged_at").is_null())
    loaded.trace.converged_at =
        value.at("elbo_trace").at("converged_at").get<Index>();

  if (!value.at("transform").is_null()) {
    StandardizationTransform t;
    t.means = vector_from_json(value.at("transform").at("means"));
    t.sds = vector_from_json(value.at("transform").at("sds"));
    loaded.transform = std::move(t);
  }
  loaded.config = value.value("config", json::object());
  return loaded;
}

json chain_to_json(const ChainSummary &chain, const std::vector<int> &cards) {
  const Index k = chain.mean_pi.size();
  json mu = json::array();
  json sigma = json::array();
  for (Index kk = 0; kk < k; ++kk) {
    mu.push_back(vector_to_json(chain.mean_mu[kk]));
    sigma.push_back(matrix_to_json(chain.mean_sigma[kk]));
  }
  json out{{"type", "gibbs_chain"},
           {"k", k},
           {"cards", cards},
           {"mean_pi", vector_to_json(chain.mean_pi)},
           {"mean_mu", mu},
           {"mean_sigma", sigma},
           {"mean_psi", ragged_to_json(chain.mean_psi, k)},
           {"last_z", chain.last_z},
           {"sweeps", chain.sweeps},
           {"burn_in", chain.burn_in},
           {"retained", chain.retained}};
  if (!chain.log_joint.empty()) out["log_joint"] = chain.log_joint;
  if (!chain.thinned.empty()) {
    json dump = json::array();
    for (const auto &state : chain.thinned) {
      json s{{"pi", vector_to_json(state.pi)}, {"z", state.z}};
      json smu = json::array(), ssigma = json::array();
      for (Index kk = 0; kk < k; ++kk) {
        smu.push_back(vector_to_json(state.mu[kk]));
        ssigma.push_back(matrix_to_json(state.sigma[kk]));
      }
      s["mu"] = smu;
      s["sigma"] = ssigma;
      s["psi"] = ragged_to_json(state.psi, k);
      dump.push_back(std::move(s));
    }
    out["thinned"] = std::move(dump);
  }
  return out;
}

LoadedChain chain_from_json(const json &value) {
  if (value.value("type", "") != "gibbs_chain")
    throw std::invalid_argument("not a gibbs_chain JSON document");
  LoadedChain loaded;
  const Index k = value.at("k");
  loaded.cards = value.at("cards").get<std::vector<int>>();
  const Index q =
      static_cast<Index>(value.at("mean_mu")[0].size());
  loaded.chain.mean_pi = vector_from_json(value.at("mean_pi"));
  for (Index kk = 0; kk < k; ++kk) {
    loaded.chain.mean_mu.push_back(vector_from_json(value.at("mean_mu")[kk]));
    loaded.chain.mean_sigma.push_back(
        matrix_from_json(value.at("mean_sigma")[kk], q, q));
  }
  loaded.chain.mean_psi = ragged_from_json(value.at("mean_psi"), loaded.cards);
  loaded.chain.last_z = value.at("last_z").get<std::vector<int>>();
  loaded.chain.sweeps = value.at("sweeps");
  loaded.chain.burn_in = value.at("burn_in");
  loaded.chain.retained = value.at("retained");
  if (value.contains("log_joint"))
    loaded.chain.log_joint = value.at("log_joint").get<std::vector<double>>();
  return loaded;
}

json metrics_to_json(const eval::MetricsRecord &rec,
                     const std::string &scenario, Index n,
                     const std::string &method, int k_spec) {
  json out{{"scenario", scenario},
           {"n", n},
           {"method", method},
           {"K_spec", k_spec},
           {"error_mu", rec.error_mu},
           {"error_sigma", rec.error_sigma},
           {"error_psi", rec.error_psi},
           {"error_pi", rec.error_pi},
           {"prop_z", rec.prop_z}};
  if (rec.error_logppd)
    out["error_logppd"] = *rec.error_logppd;
  else
    out["error_logppd"] = nullptr;
  return out;
}

json coverage_to_json(const eval::CoverageRecord &rec,
                      const std::string &scenario, Index n) {
  return json{{"scenario", scenario},
              {"n", n},
              {"replicates", rec.replicates},
              {"failures", rec.failures},
              {"overall", rec.overall},
              {"pi", rec.pi},
              {"sigma", rec.sigma},
              {"mu", rec.mu},
              {"psi", rec.psi},
              {"strict",
               {{"pi", rec.strict_pi},
                {"sigma", rec.strict_sigma},
                {"mu", rec.strict_mu},
                {"psi", rec.strict_psi}}}};
}

json predictive_summary(const VariationalParameters &vp,
                        const std::vector<int> &cards) {
  static const double kQuantiles[] = {0.05, 0.25, 0.5, 0.75, 0.95};
  const Index k = vp.k();
  const Index q = vp.m_hat.empty() ? 0 : vp.m_hat.front().size();
  const double alpha_total = vp.alpha_hat.sum();

  json clusters = json::array();
  for (Index kk = 0; kk < k; ++kk) {
    json cont = json::array();
    for (Index j = 0; j < q; ++j) {
      const MarginalT t = marginal_continuous(vp, kk, j);
      json quantiles;
      for (double prob : kQuantiles) {
        std::ostringstream key;
        key << prob;
        quantiles[key.str()] = marginal_t_quantile(t, prob);
      }
      cont.push_back({{"variable", "x" + std::to_string(j + 1)},
                      {"quantiles", quantiles}});
    }
    json cat = json::array();
    for (std::size_t j = 0; j < cards.size(); ++j)
      cat.push_back(
          {{"variable", "c" + std::to_string(j + 1)},
           {"probs",
            vector_to_json(marginal_categorical(vp, kk, static_cast<Index>(j)))}});
    clusters.push_back({{"weight", vp.alpha_hat[kk] / alpha_total},
                        {"continuous", cont},
                        {"categorical", cat}});
  }
  return json{{"type", "predictive_summary"}, {"clusters", clusters}};
}

}  // namespace mixvi::io
