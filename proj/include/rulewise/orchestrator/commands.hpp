#pragma once

#include "rulewise/importance/analysis.hpp"
#include "rulewise/orchestrator/config.hpp"
#include "rulewise/tuner/tuner.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rulewise::orchestrator {

/// Split, baseline, coalition sweep and importance for one config.
importance::ImportanceReport run_importance(const ExperimentConfig& config);

struct StudyCell {
  std::string label;
  double value = 0.0;
  std::optional<importance::ImportanceReport> report;
  std::string error;  // set when the cell failed; the sweep carries on
};

struct StudyReport {
  std::string kind;       // volume, noise or collocation
  std::string parameter;  // name of the swept quantity
  std::vector<StudyCell> cells;

  [[nodiscard]] nlohmann::json to_json() const;
  /// One row per (cell, rule, metric).
  [[nodiscard]] std::string to_csv() const;
};

StudyReport volume_study(const ExperimentConfig& config, const std::vector<std::size_t>& volumes);
StudyReport noise_study(const ExperimentConfig& config, const std::vector<double>& levels);
/// Interior grids of n points per axis, faces of n points.
StudyReport colloc_study(const ExperimentConfig& config, const std::vector<std::size_t>& sizes);

/// Weighting comparison for every configured seed, each seed tuned separately.
std::vector<tuner::WeightingComparison> run_tuning(const ExperimentConfig& config);

importance::WrongRuleScan run_wrong_rules(const ExperimentConfig& config);

/// report.json, report.csv and, unless csv_only, ri.svg plus relying_rule<k>.svg.
void write_report(const importance::ImportanceReport& report, const std::filesystem::path& dir, bool csv_only);
void write_study(const StudyReport& study, const std::filesystem::path& dir, bool csv_only);
void write_tuning(const std::vector<tuner::WeightingComparison>& runs, const std::filesystem::path& dir,
                  bool csv_only);
void write_wrong_rules(const importance::WrongRuleScan& scan, const std::filesystem::path& dir, bool csv_only);

}  // namespace rulewise::orchestrator
