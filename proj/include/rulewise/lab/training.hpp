#pragma once

#include "rulewise/autodiff/adam.hpp"
#include "rulewise/autodiff/network.hpp"
#include "rulewise/common/dataset.hpp"
#include "rulewise/rules/coalition.hpp"
#include "rulewise/rules/collocation.hpp"
#include "rulewise/rules/rule.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace rulewise::lab {

struct TrainProtocol {
  std::size_t pretrain_epochs_max = 8000;
  std::size_t finetune_epochs_max = 4000;
  std::size_t plateau_patience = 500;
  double plateau_tol = 1e-3;
  double learning_rate = 1e-3;
  std::vector<std::uint64_t> seeds = {0};
  bool exclude_failed = false;

  /// Throws ConfigError on non-positive counts or an empty seed list.
  void validate() const;
};

/// Early stop once the monitored loss has not improved by a relative `tol` for `patience` epochs.
class PlateauMonitor {
 public:
  PlateauMonitor(std::size_t patience, double tol) : patience_(patience), tol_(tol) {}
  /// Returns true when training should stop.
  bool update(double loss);
  [[nodiscard]] double best() const { return best_; }

 private:
  std::size_t patience_;
  double tol_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t since_ = 0;
};

struct Baseline {
  ad::Network network;
  ad::AdamState optimizer;
  std::size_t epochs = 0;
  double train_data_loss = 0.0;
};

/// Data-only training from the seeded initialization until plateau or the epoch cap.
/// With no training data the fresh initialization is returned untouched.
/// Throws TrainingError when the loss diverges.
Baseline pretrain_baseline(const ad::NetworkSpec& spec, const Dataset& train, const Dataset& validation,
                           const TrainProtocol& protocol, std::uint64_t seed);

struct CoalitionResult {
  rules::Coalition coalition;
  std::uint64_t seed = 0;
  double test_mse = 0.0;
  std::vector<double> channel_mse;
  double validation_mse = 0.0;  // NaN when there is no validation data
  std::size_t epochs_run = 0;
  std::string config_hash;
  bool failed = false;
  double pre_injection_data_loss = 0.0;  // training data loss of the baseline
  double injection_loss = 0.0;           // composite loss at the first fine-tune epoch
  double final_loss = 0.0;               // composite loss after fine-tuning

  friend bool operator==(const CoalitionResult&, const CoalitionResult&);
};

/// Everything one coalition job needs besides the baseline.
struct JobInputs {
  const rules::RuleSet* rules = nullptr;
  const std::vector<rules::CollocationSet>* colloc = nullptr;
  const Dataset* train = nullptr;
  const Dataset* validation = nullptr;
  const Dataset* test = nullptr;
  const TrainProtocol* protocol = nullptr;
};

/// Warm-starts from the baseline (network and optimizer moments) and trains the
/// coalition's composite loss. The empty coalition is the baseline evaluated as is.
/// Divergence is recorded with `failed` and the last finite network's errors.
CoalitionResult finetune_coalition(const Baseline& baseline, rules::Coalition coalition, const JobInputs& in,
                                   std::uint64_t seed);

}  // namespace rulewise::lab
