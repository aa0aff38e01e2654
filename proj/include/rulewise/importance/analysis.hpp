#pragma once

#include "rulewise/importance/report.hpp"
#include "rulewise/lab/lab.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rulewise::importance {

struct AnalysisOptions {
  Method method = Method::Exact;
  std::size_t samples = 64;  // per rule, Monte Carlo only
  std::uint64_t sample_seed = 0;
};

/// Trains (or fetches) the coalitions the method needs and builds the report.
/// Exact methods sweep all 2^N coalitions; Monte Carlo draws `samples` coalitions per
/// rule and also runs the full coalition and its one-rule removals for FI.
ImportanceReport analyze(lab::CoalitionLab& lab, const AnalysisOptions& options);

inline constexpr double kDefaultFlagThreshold = 0.1;

struct Perturbation {
  std::string id;
  std::size_t rule = 0;  // 0-based
  std::string equation;
};

struct ScenarioReport {
  Perturbation perturbation;
  ImportanceReport report;
  std::vector<double> delta_ri;  // scenario RI minus reference RI, per rule
  bool flagged = false;          // the perturbed rule's RI is below -threshold
  bool minimum = false;          // the perturbed rule has the lowest RI of the scenario
};

struct WrongRuleScan {
  double threshold = kDefaultFlagThreshold;
  ImportanceReport reference;
  std::vector<ScenarioReport> scenarios;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Replaces one rule per scenario and recomputes importance. Throws ConfigError for
/// an invalid perturbation expression or rule index.
WrongRuleScan wrong_rule_scan(lab::CoalitionLab& lab, const std::vector<Perturbation>& perturbations,
                              const AnalysisOptions& options, double threshold = kDefaultFlagThreshold);

}  // namespace rulewise::importance
