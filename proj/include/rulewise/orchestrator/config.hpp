#pragma once

#include "rulewise/importance/analysis.hpp"
#include "rulewise/lab/lab.hpp"
#include "rulewise/tuner/tuner.hpp"
#include "rulewise/zoo/data.hpp"
#include "rulewise/zoo/problem.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rulewise::orchestrator {

struct EquationOverride {
  std::size_t rule = 0;  // 0-based
  std::string equation;
};

/// Everything an experiment run needs. Rule indices in `weights`, `drop` and
/// `equations` use the problem's own numbering; wrong-rule scenarios use the
/// numbering left after drops.
struct ExperimentConfig {
  zoo::ProblemId problem = zoo::ProblemId::MultiVar;
  zoo::MultivarMode multivar_mode = zoo::MultivarMode::Outer;

  std::optional<std::filesystem::path> data_path;
  bool expect_full_grid = true;
  zoo::SplitSpec split;

  std::optional<std::size_t> hidden_layers;
  std::optional<std::size_t> hidden_width;
  std::optional<ad::Activation> activation;
  lab::TrainProtocol protocol;
  std::optional<std::vector<std::size_t>> collocation_interior;
  std::optional<std::size_t> collocation_face;

  std::vector<double> weights;  // empty keeps the problem defaults
  std::vector<std::size_t> drop;
  std::vector<EquationOverride> equations;

  importance::AnalysisOptions importance;
  tuner::TuneOptions tuning;
  importance::AnalysisOptions tuning_importance{importance::Method::MonteCarlo, 8, 0};
  double flag_threshold = importance::kDefaultFlagThreshold;
  std::vector<importance::Perturbation> scenarios;

  std::vector<std::size_t> volumes = {0, 10, 100, 1000, 10000};
  std::vector<double> noise_levels = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::size_t> collocation_sizes = {10, 50, 100};

  std::filesystem::path output_dir = "rulewise-out";
  std::optional<std::filesystem::path> cache_dir;
  bool csv_only = false;
  std::size_t workers = 0;  // 0: RULEWISE_WORKERS or the hardware concurrency

  /// Normalized JSON form; parse_config(to_json()) reproduces the config.
  [[nodiscard]] nlohmann::json to_json() const;
  /// Digest of the fields that affect numbers (not output paths or worker count).
  [[nodiscard]] std::string config_hash() const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies RULEWISE_CACHE_DIR and RULEWISE_WORKERS when the config leaves them unset.
void apply_environment(ExperimentConfig& config);

/// Resolved problem, data split and lab inputs.
struct Prepared {
  zoo::ProblemDef problem;
  lab::Experiment experiment;
  zoo::SplitManifest manifest;
};

/// Loads or generates the data, splits it and applies rule overrides. Throws
/// DataError for a missing or malformed dataset.
Prepared prepare(const ExperimentConfig& config);

/// Dataset the config points at: the ingested file, or the generated reference.
Dataset load_dataset(const ExperimentConfig& config, const zoo::ProblemDef& problem);

/// A lab for the prepared experiment with the config's cache and worker count.
lab::CoalitionLab make_lab(const ExperimentConfig& config, const Prepared& prepared);

}  // namespace rulewise::orchestrator
