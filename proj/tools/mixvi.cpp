// mixvi command line: simulation, fitting, evaluation, coverage studies
// and predictive summaries as reproducible pipelines.
//
// Exit codes: 0 success, 1 runtime/numeric failure, 2 usage error.
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mixvi/cavi.hpp"
#include "mixvi/evaluation.hpp"
#include "mixvi/gibbs.hpp"
#include "mixvi/io.hpp"
#include "mixvi/math.hpp"
#include "mixvi/model.hpp"
#include "mixvi/predictive.hpp"
#include "mixvi/simulation.hpp"

namespace {

namespace fs = std::filesystem;
using mixvi::Index;
using mixvi::io::json;

constexpr const char *kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::uint64_t effective_seed(std::uint64_t cli_seed) {
  if (const char *env = std::getenv("MIXVI_SEED"))
    return std::strtoull(env, nullptr, 10);
  return cli_seed;
}

mixvi::io::RunManifest make_run(const std::string &command, const json &config,
                                std::uint64_t seed,
                                std::vector<std::string> inputs,
                                std::vector<std::string> outputs,
                                const Stopwatch &watch) {
  mixvi::io::RunManifest run;
  run.command = command;
  run.config_hash = mixvi::io::config_hash(config);
  run.seed = seed;
  run.inputs = std::move(inputs);
  run.outputs = std::move(outputs);
  run.wall_clock_ms = watch.ms();
  run.version = kVersion;
  return run;
}

mixvi::MixedDataset load_dataset(const std::string &data_path,
                                 std::string manifest_path) {
  if (!fs::exists(data_path))
    throw UsageError("dataset file not found: " + data_path);
  std::optional<fs::path> manifest;
  if (!manifest_path.empty()) {
    if (!fs::exists(manifest_path))
      throw UsageError("manifest file not found: " + manifest_path);
    manifest = manifest_path;
  } else {
    // pick up the sidecar written by `simulate` when present
    fs::path sidecar = fs::path(data_path);
    sidecar.replace_extension(".manifest.json");
    if (fs::exists(sidecar)) manifest = sidecar;
  }
  mixvi::MixedDataset data = mixvi::io::read_dataset_csv(data_path, manifest);
  mixvi::require_valid(data);
  return data;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string &scenario_name, Index n,
                 std::uint64_t seed, const std::string &out_dir) {
  Stopwatch watch;
  const mixvi::sim::Scenario scenario = [&] {
    try {
      return mixvi::sim::parse_scenario(scenario_name);
    } catch (const std::invalid_argument &e) {
      throw UsageError(e.what());
    }
  }();
  if (n < 1) throw UsageError("--n must be positive");

  const mixvi::sim::ScenarioSpec spec{scenario, n, seed};
  const mixvi::GroundTruth truth = mixvi::sim::gen_truth(spec);
  auto [data, z] = mixvi::sim::sample_dataset(truth, n, seed);

  fs::create_directories(out_dir);
  const fs::path data_path = fs::path(out_dir) / "data.csv";
  const fs::path manifest_path = fs::path(out_dir) / "data.manifest.json";
  const fs::path truth_path = fs::path(out_dir) / "truth.json";

  mixvi::io::write_dataset_csv(data_path, data);

  const json config{{"scenario", scenario_name}, {"n", n}, {"seed", seed}};
  const auto run = make_run(
      "simulate", config, seed, {},
      {data_path.string(), manifest_path.string(), truth_path.string()},
      watch);

  json manifest = mixvi::io::dataset_manifest(data);
  manifest["run"] = mixvi::io::to_json(run);
  mixvi::io::write_json(manifest_path, manifest);

  json truth_json = mixvi::io::truth_to_json(truth, &z);
  truth_json["scenario"] = scenario_name;
  truth_json["n"] = n;
  truth_json["seed"] = seed;
  truth_json["run"] = mixvi::io::to_json(run);
  mixvi::io::write_json(truth_path, truth_json);

  std::cout << "wrote " << data_path.string() << " (" << n << " rows), "
            << manifest_path.string() << ", " << truth_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct FitOptions {
  std::string data_path;
  std::string manifest_path;
  std::string method = "cavi";
  int k = 1;
  double tol = 1e-6;
  Index max_sweeps = 500;
  std::uint64_t seed = 0;
  double epsilon = 1.0;
  std::string init = "kprototypes";
  bool no_standardize = false;
  bool strict = false;
  int threads = 0;
  Index sweeps = 2000;
  Index burn_in = 1000;
  Index thin = 0;
  bool store_log_joint = false;
  std::string out_dir = ".";
};

json transform_to_json(const std::optional<mixvi::StandardizationTransform> &t) {
  if (!t) return nullptr;
  json means = json::array(), sds = json::array();
  for (Index j = 0; j < t->means.size(); ++j) {
    means.push_back(t->means[j]);
    sds.push_back(t->sds[j]);
  }
  return json{{"means", means}, {"sds", sds}};
}

int cmd_fit(const FitOptions &opt) {
  Stopwatch watch;
  if (opt.method != "cavi" && opt.method != "gibbs")
    throw UsageError("--method must be cavi or gibbs");
  if (opt.k < 1) throw UsageError("--k must be >= 1");
  if (opt.init != "kprototypes" && opt.init != "random")
    throw UsageError("--init must be kprototypes or random");

  mixvi::MixedDataset data = load_dataset(opt.data_path, opt.manifest_path);
  std::optional<mixvi::StandardizationTransform> transform;
  if (!opt.no_standardize) {
    auto [std_data, t] = mixvi::standardize(data);
    data = std::move(std_data);
    transform = std::move(t);
  }
  const mixvi::PriorHyperparameters priors =
      mixvi::default_priors(data, opt.k);

  fs::create_directories(opt.out_dir);

  if (opt.method == "cavi") {
    mixvi::FitConfig config;
    config.tol = opt.tol;
    config.max_sweeps = opt.max_sweeps;
    config.seed = opt.seed;
    config.epsilon = opt.epsilon;
    config.init = opt.init == "kprototypes" ? mixvi::InitMethod::kKPrototypes
                                            : mixvi::InitMethod::kRandom;
    config.threads = opt.threads;

    const mixvi::FitResult result = mixvi::fit(data, priors, config);

    const json config_json{{"K", opt.k},
                           {"tol", opt.tol},
                           {"max_sweeps", opt.max_sweeps},
                           {"seed", opt.seed},
                           {"epsilon", opt.epsilon},
                           {"init", opt.init},
                           {"standardize", !opt.no_standardize}};
    const fs::path model_path = fs::path(opt.out_dir) / "model.json";
    json model = mixvi::io::model_to_json(result.vp, priors, result.trace,
                                          data.cards, transform, config_json);
    model["run"] = mixvi::io::to_json(make_run("fit", config_json, opt.seed,
                                               {opt.data_path},
                                               {model_path.string()}, watch));
    mixvi::io::write_json(model_path, model);

    std::cout << "final ELBO " << result.trace.values.back() << " after "
              << result.trace.values.size() << " sweeps";
    if (result.trace.converged_at)
      std::cout << " (converged at sweep " << *result.trace.converged_at
                << ")";
    std::cout << "\nwrote " << model_path.string() << "\n";
    if (opt.strict && !result.trace.converged_at) {
      std::cerr << "error: did not converge within " << opt.max_sweeps
                << " sweeps\n";
      return 1;
    }
    return 0;
  }

  // gibbs
  if (opt.sweeps <= opt.burn_in)
    throw UsageError("--sweeps must exceed --burn-in");
  mixvi::ChainConfig config;
  config.sweeps = opt.sweeps;
  config.burn_in = opt.burn_in;
  config.seed = opt.seed;
  config.thin = opt.thin;
  config.store_log_joint = opt.store_log_joint;
  const mixvi::ChainSummary chain = mixvi::run_chain(data, priors, config);

  const json config_json{{"K", opt.k},
                         {"sweeps", opt.sweeps},
                         {"burn_in", opt.burn_in},
                         {"seed", opt.seed},
                         {"thin", opt.thin},
                         {"standardize", !opt.no_standardize}};
  const fs::path chain_path = fs::path(opt.out_dir) / "chain.json";
  json out = mixvi::io::chain_to_json(chain, data.cards);
  out["transform"] = transform_to_json(transform);
  out["run"] = mixvi::io::to_json(make_run(
      "fit", config_json, opt.seed, {opt.data_path}, {chain_path.string()},
      watch));
  mixvi::io::write_json(chain_path, out);

  std::cout << "ran " << chain.sweeps << " sweeps, retained "
            << chain.retained << " samples\nwrote " << chain_path.string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

mixvi::StandardizationTransform transform_from_json(const json &value) {
  mixvi::StandardizationTransform t;
  const auto &means = value.at("means");
  const auto &sds = value.at("sds");
  t.means.resize(means.size());
  t.sds.resize(sds.size());
  for (std::size_t j = 0; j < means.size(); ++j) {
    t.means[static_cast<Index>(j)] = means[j];
    t.sds[static_cast<Index>(j)] = sds[j];
  }
  return t;
}

mixvi::StandardizationTransform identity_transform(Index q) {
  mixvi::StandardizationTransform t;
  t.means = mixvi::Vector::Zero(q);
  t.sds = mixvi::Vector::Ones(q);
  return t;
}

int cmd_evaluate(const std::string &model_path, const std::string &truth_path,
                 std::uint64_t seed, bool allow_overspecified,
                 const std::string &out_path) {
  Stopwatch watch;
  if (!fs::exists(model_path))
    throw UsageError("model file not found: " + model_path);
  if (!fs::exists(truth_path))
    throw UsageError("truth file not found: " + truth_path);

  const json model_json = mixvi::io::read_json(model_path);
  const json truth_json = mixvi::io::read_json(truth_path);
  std::vector<int> z_star;
  const mixvi::GroundTruth truth =
      mixvi::io::truth_from_json(truth_json, &z_star);
  if (z_star.empty())
    throw UsageError("truth file has no component labels (z)");
  const std::string scenario = truth_json.value("scenario", "unknown");

  const std::string type = model_json.value("type", "");
  mixvi::eval::MetricsRecord rec;
  std::string method;
  int k_spec = 0;
  Index n_train = 0;

  if (type == "cavi_model") {
    const mixvi::io::LoadedModel model = mixvi::io::model_from_json(model_json);
    k_spec = static_cast<int>(model.vp.k());
    if (k_spec != static_cast<int>(truth.k()) && !allow_overspecified)
      throw UsageError(
          "model K differs from truth K (pass --allow-overspecified to "
          "evaluate anyway)");
    n_train = model.vp.resp.rows();
    const auto transform = model.transform ? *model.transform
                                           : identity_transform(truth.q());
    rec = mixvi::eval::evaluate_vi(model.vp, truth, transform, z_star,
                                   n_train, seed);
    method = "vi";
  } else if (type == "gibbs_chain") {
    const mixvi::io::LoadedChain loaded =
        mixvi::io::chain_from_json(model_json);
    k_spec = static_cast<int>(loaded.chain.mean_pi.size());
    if (k_spec != static_cast<int>(truth.k()) && !allow_overspecified)
      throw UsageError(
          "chain K differs from truth K (pass --allow-overspecified to "
          "evaluate anyway)");
    n_train = static_cast<Index>(loaded.chain.last_z.size());
    const auto transform =
        model_json.contains("transform") && !model_json.at("transform").is_null()
            ? transform_from_json(model_json.at("transform"))
            : identity_transform(truth.q());
    rec = mixvi::eval::evaluate_gibbs(loaded.chain, truth, transform, z_star);
    method = "gibbs";
  } else {
    throw UsageError("unrecognized model file type: '" + type + "'");
  }

  const json config{{"model", model_path}, {"truth", truth_path},
                    {"seed", seed}};
  json out = mixvi::io::metrics_to_json(
      rec, scenario, truth_json.value("n", n_train), method, k_spec);
  out["run"] = mixvi::io::to_json(make_run("evaluate", config, seed,
                                           {model_path, truth_path},
                                           {out_path}, watch));
  mixvi::io::write_json(out_path, out);

  std::cout << "error_mu " << rec.error_mu << "  error_sigma "
            << rec.error_sigma << "  error_pi " << rec.error_pi
            << "  error_psi " << rec.error_psi << "  prop_z " << rec.prop_z;
  if (rec.error_logppd) std::cout << "  error_logppd " << *rec.error_logppd;
  std::cout << "\nwrote " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_coverage(const std::string &scenario_name, Index n, int reps,
                 std::uint64_t seed, double mass, int threads,
                 const std::string &out_path) {
  Stopwatch watch;
  if (reps < 10) throw UsageError("--reps must be at least 10");
  if (n < 10) throw UsageError("--n is too small");

  mixvi::eval::CoverageConfig config;
  try {
    config.scenario = mixvi::sim::parse_scenario(scenario_name);
  } catch (const std::invalid_argument &e) {
    throw UsageError(e.what());
  }
  config.n = n;
  config.replicates = reps;
  config.seed = seed;
  config.mass = mass;
  config.threads = threads;

  const mixvi::eval::CoverageRecord rec = mixvi::eval::coverage_study(config);

  const json config_json{{"scenario", scenario_name},
                         {"n", n},
                         {"reps", reps},
                         {"seed", seed},
                         {"mass", mass}};
  json out = mixvi::io::coverage_to_json(rec, scenario_name, n);
  out["run"] = mixvi::io::to_json(
      make_run("coverage", config_json, seed, {}, {out_path}, watch));
  mixvi::io::write_json(out_path, out);

  std::cout << "coverage over " << rec.replicates << " replicates ("
            << rec.failures << " failures): overall " << rec.overall
            << "  pi " << rec.pi << "  sigma " << rec.sigma << "  mu "
            << rec.mu << "  psi " << rec.psi << "\nwrote " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_summarize(const std::string &model_path, const std::string &out_path) {
  Stopwatch watch;
  if (!fs::exists(model_path))
    throw UsageError("model file not found: " + model_path);
  const mixvi::io::LoadedModel model =
      mixvi::io::model_from_json(mixvi::io::read_json(model_path));

  json out = mixvi::io::predictive_summary(model.vp, model.cards);
  const json config{{"model", model_path}};
  out["run"] = mixvi::io::to_json(
      make_run("summarize", config, 0, {model_path}, {out_path}, watch));
  mixvi::io::write_json(out_path, out);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_predict(const std::string &model_path, const std::string &data_path,
                const std::string &manifest_path,
                const std::string &out_path) {
  Stopwatch watch;
  if (!fs::exists(model_path))
    throw UsageError("model file not found: " + model_path);
  const mixvi::io::LoadedModel model =
      mixvi::io::model_from_json(mixvi::io::read_json(model_path));
  mixvi::MixedDataset data = load_dataset(data_path, manifest_path);
  if (data.cards != model.cards)
    throw UsageError("dataset categorical layout differs from the model's");

  if (model.transform)
    data.x = mixvi::apply_transform(data.x, *model.transform);

  const auto comps = mixvi::predictive_components(model.vp);
  json rows = json::array();
  std::vector<double> lw(comps.size());
  for (Index i = 0; i < data.n(); ++i) {
    const mixvi::Vector xi = data.x.row(i).transpose();
    for (std::size_t kk = 0; kk < comps.size(); ++kk) {
      const auto &c = comps[kk];
      double v = std::log(c.weight) +
                 mixvi::math::mvt_logpdf(xi, c.t_dof, c.t_loc, c.t_scale);
      for (Index j = 0; j < data.p(); ++j)
        v += std::log(c.cat_probs[j][data.c(i, j) - 1]);
      lw[kk] = v;
    }
    const double total = mixvi::math::log_sum_exp(lw);
    const Index label = static_cast<Index>(
        std::max_element(lw.begin(), lw.end()) - lw.begin());
    rows.push_back({{"log_ppd", total}, {"label", label + 1}});
  }

  const json config{{"model", model_path}, {"data", data_path}};
  json out{{"type", "predictions"}, {"rows", rows}};
  out["run"] = mixvi::io::to_json(make_run(
      "predict", config, 0, {model_path, data_path}, {out_path}, watch));
  mixvi::io::write_json(out_path, out);
  std::cout << "scored " << data.n() << " rows\nwrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"mixvi: Bayesian mixture models for mixed continuous and "
               "categorical data"};
  app.require_subcommand(1);

  // simulate
  auto *simulate = app.add_subcommand(
      "simulate", "Generate a benchmark dataset with known parameters");
  std::string sim_scenario;
  Index sim_n = 5000;
  std::uint64_t sim_seed = 0;
  std::string sim_out = ".";
  simulate->add_option("--scenario", sim_scenario,
                       "Scenario id: onedim|s1|s2|s3")->required();
  simulate->add_option("--n", sim_n, "Number of observations")->required();
  simulate->add_option("--seed", sim_seed, "RNG seed");
  simulate->add_option("--out", sim_out, "Output directory");

  // fit
  auto *fit_cmd = app.add_subcommand("fit", "Fit the mixture model");
  FitOptions fit_opt;
  fit_cmd->add_option("--data", fit_opt.data_path, "Dataset CSV")->required();
  fit_cmd->add_option("--manifest", fit_opt.manifest_path,
                      "Column manifest JSON");
  fit_cmd->add_option("--method", fit_opt.method, "cavi|gibbs");
  fit_cmd->add_option("--k", fit_opt.k, "Number of components")->required();
  fit_cmd->add_option("--tol", fit_opt.tol, "Relative ELBO tolerance");
  fit_cmd->add_option("--max-sweeps", fit_opt.max_sweeps, "Sweep cap (cavi)");
  fit_cmd->add_option("--seed", fit_opt.seed, "RNG seed");
  fit_cmd->add_option("--epsilon", fit_opt.epsilon,
                      "Damping parameter recorded with the model");
  fit_cmd->add_option("--init", fit_opt.init, "kprototypes|random");
  fit_cmd->add_flag("--no-standardize", fit_opt.no_standardize,
                    "Fit in the raw data scale");
  fit_cmd->add_flag("--strict", fit_opt.strict,
                    "Exit nonzero when CAVI does not converge");
  fit_cmd->add_option("--threads", fit_opt.threads, "Worker thread cap");
  fit_cmd->add_option("--sweeps", fit_opt.sweeps, "Total sweeps (gibbs)");
  fit_cmd->add_option("--burn-in", fit_opt.burn_in, "Burn-in sweeps (gibbs)");
  fit_cmd->add_option("--thin", fit_opt.thin,
                      "Dump every t-th retained state (gibbs)");
  fit_cmd->add_flag("--store-log-joint", fit_opt.store_log_joint,
                    "Record per-sample log joint density (gibbs)");
  fit_cmd->add_option("--out", fit_opt.out_dir, "Output directory");

  // evaluate
  auto *evaluate = app.add_subcommand(
      "evaluate", "Compare a fitted model against simulation truth");
  std::string eval_model, eval_truth, eval_out = "metrics.json";
  std::uint64_t eval_seed = 0;
  bool eval_allow = false;
  evaluate->add_option("--model", eval_model, "model.json or chain.json")
      ->required();
  evaluate->add_option("--truth", eval_truth, "truth.json")->required();
  evaluate->add_option("--seed", eval_seed, "Test-set RNG seed");
  evaluate->add_flag("--allow-overspecified", eval_allow,
                     "Permit K larger than the truth");
  evaluate->add_option("--out", eval_out, "Metrics JSON path");

  // coverage
  auto *coverage = app.add_subcommand(
      "coverage", "Frequentist coverage study of the posterior HDIs");
  std::string cov_scenario, cov_out = "coverage.json";
  Index cov_n = 5000;
  int cov_reps = 100;
  std::uint64_t cov_seed = 0;
  double cov_mass = 0.95;
  int cov_threads = 0;
  coverage->add_option("--scenario", cov_scenario, "onedim|s1|s2|s3")
      ->required();
  coverage->add_option("--n", cov_n, "Observations per replicate")->required();
  coverage->add_option("--reps", cov_reps, "Replicates (>= 10)")->required();
  coverage->add_option("--seed", cov_seed, "RNG seed");
  coverage->add_option("--mass", cov_mass, "HDI mass");
  coverage->add_option("--threads", cov_threads, "Worker thread cap");
  coverage->add_option("--out", cov_out, "Coverage JSON path");

  // summarize
  auto *summarize = app.add_subcommand(
      "summarize", "Per-cluster predictive marginal summaries");
  std::string sum_model, sum_out = "summary.json";
  summarize->add_option("--model", sum_model, "model.json")->required();
  summarize->add_option("--out", sum_out, "Summary JSON path");

  // predict
  auto *predict = app.add_subcommand(
      "predict", "Score new rows with the posterior predictive");
  std::string pred_model, pred_data, pred_manifest,
      pred_out = "predictions.json";
  predict->add_option("--model", pred_model, "model.json")->required();
  predict->add_option("--data", pred_data, "CSV of rows to score")->required();
  predict->add_option("--manifest", pred_manifest, "Column manifest JSON");
  predict->add_option("--out", pred_out, "Predictions JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(sim_scenario, sim_n, effective_seed(sim_seed),
                          sim_out);
    if (fit_cmd->parsed()) {
      fit_opt.seed = effective_seed(fit_opt.seed);
      return cmd_fit(fit_opt);
    }
    if (evaluate->parsed())
      return cmd_evaluate(eval_model, eval_truth, effective_seed(eval_seed),
                          eval_allow, eval_out);
    if (coverage->parsed())
      return cmd_coverage(cov_scenario, cov_n, cov_reps,
                          effective_seed(cov_seed), cov_mass, cov_threads,
                          cov_out);
    if (summarize->parsed()) return cmd_summarize(sum_model, sum_out);
    if (predict->parsed())
      return cmd_predict(pred_model, pred_data, pred_manifest, pred_out);
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
