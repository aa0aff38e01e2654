#pragma once

#include "rulewise/rules/coalition.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace rulewise::importance {

/// Errors below this are raised to it before taking logs.
inline constexpr double kMseFloor = 1e-16;

/// Raises zero to kMseFloor; throws std::invalid_argument for negative or non-finite values.
double floor_mse(double mse);

/// MSE per coalition mask for N rules; entries may be missing.
class MseTable {
 public:
  explicit MseTable(std::size_t rules);
  /// Complete table from 2^N values indexed by mask.
  static MseTable from_values(std::size_t rules, const std::vector<double>& values);
  /// Per-mask geometric mean over tables; a mask is present when any table has it.
  static MseTable geometric_mean(const std::vector<MseTable>& tables);

  [[nodiscard]] std::size_t rules() const { return n_; }
  [[nodiscard]] std::size_t masks() const { return values_.size(); }
  void set(std::uint32_t mask, double mse);
  [[nodiscard]] bool has(std::uint32_t mask) const { return values_.at(mask).has_value(); }
  /// Throws std::out_of_range when missing.
  [[nodiscard]] double at(std::uint32_t mask) const;
  [[nodiscard]] bool complete() const;
  /// Multiplies every entry by c > 0.
  [[nodiscard]] MseTable scaled(double c) const;

 private:
  std::size_t n_;
  std::vector<std::optional<double>> values_;
};

/// log10(MSE(s without i)) - log10(MSE(s)) for a coalition s containing rule i (0-based).
double marginal(const MseTable& table, std::size_t i, rules::Coalition s);

/// Mean marginal over the 2^(N-1) coalitions containing i.
double rule_importance(const MseTable& table, std::size_t i);

/// Marginal at the full coalition.
double full_importance(const MseTable& table, std::size_t i);

struct RelyingPoint {
  std::size_t relying = 0;  // r: number of other rules present
  double mean = 0.0;
  std::vector<rules::Coalition> coalitions;
  std::vector<double> values;
};

/// Marginals of rule i grouped by the number of other rules present, r = 0..N-1.
std::vector<RelyingPoint> relying_curve(const MseTable& table, std::size_t i);

/// Marginals weighted by (|s|-1)!(N-|s|)!/N!, the permutation-average weighting.
double shapley_weighted(const MseTable& table, std::size_t i);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;  // infinite when a single draw cannot estimate spread
  std::size_t samples = 0;
  bool exhaustive = false;  // every containing coalition was drawn: the estimate is exact
};

/// Coalitions containing i drawn uniformly: without replacement when samples does not
/// exceed 2^(N-1), with replacement otherwise. Deterministic in the seed.
std::vector<rules::Coalition> sample_coalitions(std::size_t n, std::size_t i, std::size_t samples, std::uint64_t seed);

/// Sample mean of marginals over sample_coalitions(...). The standard error carries
/// the finite-population correction when drawing without replacement.
/// `mse` is called for every drawn coalition and for it without rule i.
MonteCarloEstimate monte_carlo_ri(const std::function<double(rules::Coalition)>& mse, std::size_t n, std::size_t i,
                                  std::size_t samples, std::uint64_t seed);

/// RI per (rule, channel) from one table per output channel.
std::vector<std::vector<double>> per_variable_importance(const std::vector<MseTable>& channel_tables);

}  // namespace rulewise::importance
