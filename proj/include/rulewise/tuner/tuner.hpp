#pragma once

#include "rulewise/importance/analysis.hpp"
#include "rulewise/lab/lab.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rulewise::tuner {

struct TuneStep {
  std::size_t iteration = 0;
  std::vector<double> weights;  // the weights evaluated at this step
  double validation_loss = 0.0;
  std::vector<double> ri;  // importance that drove the proposal; empty for the starting point
  bool accepted = false;
  double step = 0.0;  // step size used for the proposal
};

struct TuneState {
  std::size_t iteration = 0;
  std::vector<double> weights;
  double step = 0.5;
  double best_validation_loss = 0.0;
  std::vector<TuneStep> history;

  /// iteration, lambda_1..lambda_N, validation_loss, accepted, step.
  [[nodiscard]] std::string trajectory_csv() const;
};

struct TuneOptions {
  std::size_t max_iters = 10;
  double initial_step = 0.5;
  double min_step = 1e-3;
  double threshold = importance::kDefaultFlagThreshold;  // dead zone on |RI|
};

/// What the tuning loop needs from the outside world.
class TuneOracle {
 public:
  virtual ~TuneOracle() = default;
  /// Rule importance under the given weights.
  virtual std::vector<double> importance(const std::vector<double>& weights) = 0;
  /// Validation loss of the full coalition trained with the given weights. A
  /// TrainingError counts as a non-improving probe.
  virtual double validation_loss(const std::vector<double>& weights) = 0;
};

/// Proposal: lambda_i * (1 + step) when RI_i > threshold, lambda_i * (1 - step) clamped
/// at 0 when RI_i < -threshold, unchanged otherwise.
std::vector<double> propose_weights(const std::vector<double>& weights, const std::vector<double>& ri, double step,
                                    double threshold);

/// Accepts a proposal only when it lowers the validation loss; otherwise reverts and
/// halves the step. Stops after max_iters proposals, once the step drops below
/// min_step, or when a proposal leaves every weight unchanged.
TuneState tune_weights(TuneOracle& oracle, std::vector<double> initial, const TuneOptions& options);

/// Oracle backed by a coalition lab for a single seed.
class LabTuneOracle : public TuneOracle {
 public:
  LabTuneOracle(lab::CoalitionLab& lab, importance::AnalysisOptions analysis);

  std::vector<double> importance(const std::vector<double>& weights) override;
  double validation_loss(const std::vector<double>& weights) override;
  /// Full-coalition result with the given weights.
  lab::CoalitionResult full_result(const std::vector<double>& weights);

 private:
  lab::CoalitionLab& lab_;
  importance::AnalysisOptions analysis_;
};

/// Experiment restricted to one seed, for per-seed tuning.
lab::Experiment single_seed(const lab::Experiment& exp, std::uint64_t seed);

enum class WeightingMethod { Default, Empirical, GradientFlow, Ours };
std::string to_string(WeightingMethod m);

struct WeightingRow {
  WeightingMethod method = WeightingMethod::Default;
  bool applicable = true;
  std::vector<double> weights;
  double test_mse = 0.0;
  double validation_mse = 0.0;
};

struct WeightingComparison {
  std::uint64_t seed = 0;
  std::vector<WeightingRow> rows;
  TuneState tuning;

  [[nodiscard]] const WeightingRow& row(WeightingMethod m) const;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Empirical weights: each rule loss brought to the order of magnitude of the data
/// loss at the baseline, lambda_i = 10^round(log10(L_data / L_i)). Rules with zero
/// loss, or problems without data, keep weight 1.
std::vector<double> empirical_weights(lab::CoalitionLab& lab, std::uint64_t seed);

/// Default, Empirical, Ours and a not-applicable Gradient flow row, for the lab's
/// first seed. The lab should carry a single seed.
WeightingComparison compare_weighting_methods(lab::CoalitionLab& lab, const TuneOptions& options,
                                              const importance::AnalysisOptions& analysis);

}  // namespace rulewise::tuner
