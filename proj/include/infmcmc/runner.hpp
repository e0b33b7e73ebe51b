#pragma once

#include "infmcmc/chain.hpp"
#include "infmcmc/diagnostics.hpp"
#include "infmcmc/model.hpp"
#include "infmcmc/prior.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace infmcmc {

struct PriorSpec {
  std::string kind = "2d"; ///< "2d", "1d" or "explicit"
  Hyper hyper;
  int cap = 10;
  std::vector<double> eigenvalues; ///< explicit only
};

struct GroundwaterSpec {
  int inference_mesh = 20;
  int data_mesh = 40;
  double noise_variance = 1e-4;
  int station_count = 33;
  std::array<double, 2> station_centre = {0.5, 0.5};
  double station_radius = 0.25;
  std::uint64_t data_seed = 0;
};

/// Design entries iid N(0, 1); truth drawn from the prior.
struct LinearGaussianSpec {
  int obs = 10;
  double noise_variance = 1.0;
  std::uint64_t design_seed = 0;
  std::uint64_t data_seed = 0;
};

struct ExperimentConfig {
  PriorSpec prior;
  std::variant<GroundwaterSpec, LinearGaussianSpec> model;
  std::vector<SamplerConfig> algorithms;
  std::string baseline;
  std::filesystem::path output_dir = "out";
  bool dump_samples = true;
};

/// Parse and validate; ConfigError names the offending key, e.g.
/// "algorithms[2].step".
ExperimentConfig parse_config(const nlohmann::json &doc);
/// Reads JSON from disk; syntax errors become ConfigError("<file>", ...) with
/// the byte offset.
ExperimentConfig load_config(const std::filesystem::path &path);
/// Fully resolved configuration, every default written out.
nlohmann::ordered_json to_json(const ExperimentConfig &config);

/// Prior, model with data, and the provenance of the data.
struct Experiment {
  std::shared_ptr<const KLPrior> prior;
  std::unique_ptr<ForwardModel> model;
  Coefficients truth;
  Eigen::VectorXd clean_data; ///< G(truth) on the data-generating model
  nlohmann::ordered_json provenance;
};

/// Throws SolverFailure if the data-generating solve fails.
Experiment build_experiment(const ExperimentConfig &config);

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;
  int jobs = 1;
};

struct RunResult {
  std::vector<ChainRecord> records;
  std::vector<SummaryRow> summary;
  std::filesystem::path output_dir;
};

/// Runs every configured chain and writes manifest.json, one trace CSV (and
/// optionally a samples CSV) plus a chain JSON per algorithm, summary.csv
/// and summary.json.
RunResult run_experiment(const ExperimentConfig &config, const RunOptions &options = {});

/// Rebuilds the summary from a finished output directory.
std::vector<SummaryRow> summarize_directory(const std::filesystem::path &dir,
                                            std::optional<std::string> baseline = {});

} // namespace infmcmc
