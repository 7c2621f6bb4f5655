// File formats: dataset CSV with a column manifest sidecar, and JSON
// serialization for models, chains, truths, metrics, coverage records and
// predictive summaries. Every JSON output embeds the run manifest that
// produced it under the "run" key.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixvi/cavi.hpp"
#include "mixvi/evaluation.hpp"
#include "mixvi/gibbs.hpp"
#include "mixvi/model.hpp"

namespace mixvi::io {

using json = nlohmann::json;

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_clock_ms = 0.0;
  std::string version;
};

json to_json(const RunManifest &run);
std::string config_hash(const json &config);

void write_json(const std::filesystem::path &path, const json &value);
json read_json(const std::filesystem::path &path);

// Dataset CSV: header row with columns typed "f:<name>" (continuous) or
// "c:<name>" (categorical, 1-based integer codes).
void write_dataset_csv(const std::filesystem::path &path,
                       const MixedDataset &data);
// Column manifest sidecar with explicit cardinalities.
json dataset_manifest(const MixedDataset &data);
// Reads a CSV; cardinalities come from the manifest when given, otherwise
// the maximum observed code per column.
MixedDataset read_dataset_csv(const std::filesystem::path &path,
                              const std::optional<std::filesystem::path>
                                  &manifest_path = std::nullopt);

json truth_to_json(const GroundTruth &truth,
                   const std::vector<int> *z = nullptr);
GroundTruth truth_from_json(const json &value, std::vector<int> *z = nullptr);

json model_to_json(const VariationalParameters &vp,
                   const PriorHyperparameters &priors, const ElboTrace &trace,
                   const std::vector<int> &cards,
                   const std::optional<StandardizationTransform> &transform,
                   const json &config);

struct LoadedModel {
  VariationalParameters vp;
  PriorHyperparameters priors;
  ElboTrace trace;
  std::vector<int> cards;
  std::optional<StandardizationTransform> transform;
  json config;
};
LoadedModel model_from_json(const json &value);

json chain_to_json(const ChainSummary &chain, const std::vector<int> &cards);
struct LoadedChain {
  ChainSummary chain;
  std::vector<int> cards;
};
LoadedChain chain_from_json(const json &value);

json metrics_to_json(const eval::MetricsRecord &rec,
                     const std::string &scenario, Index n,
                     const std::string &method, int k_spec);
json coverage_to_json(const eval::CoverageRecord &rec,
                      const std::string &scenario, Index n);

// Per-cluster marginal-t quantiles and categorical probability vectors,
// the data behind per-cluster radar/bar summaries.
json predictive_summary(const VariationalParameters &vp,
                        const std::vector<int> &cards);

}  // namespace mixvi::io
