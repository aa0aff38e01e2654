#pragma once

#include "rulewise/importance/measures.hpp"
#include "rulewise/lab/training.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace rulewise::importance {

enum class Method { Exact, MonteCarlo, ShapleyWeighted };

std::string to_string(Method m);
/// "exact", "monte_carlo" or "shapley_weighted"; throws ConfigError otherwise.
Method parse_method(const std::string& text);

/// MSE tables assembled from coalition results.
struct ResultTables {
  std::vector<std::uint64_t> seeds;
  std::vector<MseTable> per_seed;          // overall test MSE, one per seed
  MseTable aggregate{0};                    // geometric mean over seeds
  std::vector<MseTable> channel_aggregate;  // one per output channel
};

/// Groups results by seed. With `exclude_failed`, diverged runs are left out of the
/// aggregates; a mask whose every seed failed is then missing.
ResultTables tabulate(const std::vector<lab::CoalitionResult>& results, std::size_t rules, std::size_t channels,
                      bool exclude_failed);

struct ImportanceReport {
  std::string problem;
  Method method = Method::Exact;
  std::size_t sample_count = 0;  // Monte Carlo only
  std::uint64_t sample_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  std::vector<std::string> rule_names;
  std::vector<std::string> channel_names;

  std::vector<double> ri;
  std::vector<double> ri_stderr;  // Monte Carlo only
  std::vector<double> fi;
  std::vector<double> shapley;                   // empty for Monte Carlo
  std::vector<std::vector<RelyingPoint>> curves;  // per rule, r = 0..N-1; empty for Monte Carlo
  std::vector<std::vector<double>> per_variable;  // [rule][channel]
  std::vector<lab::CoalitionResult> results;

  /// The score a reader should rank rules by: the Shapley variant when requested, else RI.
  [[nodiscard]] const std::vector<double>& headline() const;

  [[nodiscard]] nlohmann::json to_json() const;
  /// One row per (rule, metric).
  [[nodiscard]] std::string to_csv() const;
};

/// Exact (or Shapley-weighted) report from a complete sweep.
ImportanceReport exact_report(const ResultTables& tables, Method method);

ImportanceReport report_from_json(const nlohmann::json& j);

}  // namespace rulewise::importance
