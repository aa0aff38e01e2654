#pragma once

#include "rulewise/autodiff/network.hpp"
#include "rulewise/common/dataset.hpp"
#include "rulewise/lab/cache.hpp"
#include "rulewise/lab/training.hpp"
#include "rulewise/rules/collocation.hpp"
#include "rulewise/rules/rule.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace rulewise::lab {

/// Fully resolved inputs of a coalition sweep.
struct Experiment {
  std::string problem;
  rules::RuleSet rules;
  ad::NetworkSpec net;
  rules::CollocationShape collocation;
  Dataset train;
  Dataset validation;
  Dataset test;
  TrainProtocol protocol;
};

struct LabStats {
  std::size_t pretrain_jobs = 0;
  std::size_t training_jobs = 0;  // coalition fine-tunes actually run (empty coalitions count too)
  std::size_t cache_hits = 0;
};

/// Runs the pre-train / fine-tune protocol for coalitions of one experiment, with
/// an optional disk cache and a pool of worker threads. Results do not depend on
/// the worker count or job order.
class CoalitionLab {
 public:
  CoalitionLab(Experiment experiment, std::shared_ptr<const ResultCache> cache, std::size_t workers);

  [[nodiscard]] const Experiment& experiment() const { return *exp_; }
  [[nodiscard]] std::size_t rule_count() const { return exp_->rules.size(); }
  [[nodiscard]] std::size_t workers() const { return workers_; }

  /// Digest of everything except the rules: problem, network, data, protocol (without
  /// the seed list) and collocation shapes.
  [[nodiscard]] const std::string& base_hash() const { return base_hash_; }
  /// Base digest plus the definitions of the coalition's active rules only, so
  /// coalitions untouched by a rule override share cache entries.
  [[nodiscard]] std::string coalition_hash(rules::Coalition c) const;

  /// One result per (seed, coalition), ordered by seed then mask.
  std::vector<CoalitionResult> run(const std::vector<rules::Coalition>& coalitions);

  /// Baseline for a seed, trained on first use.
  std::shared_ptr<const Baseline> baseline(std::uint64_t seed);

  /// A lab over the same data, network and protocol with different rules. It shares
  /// this lab's baselines, cache and counters.
  [[nodiscard]] CoalitionLab with_rules(rules::RuleSet rules) const;

  [[nodiscard]] LabStats stats() const;

 private:
  struct Shared {
    std::mutex mutex;
    std::map<std::uint64_t, std::shared_ptr<const Baseline>> baselines;
    std::atomic<std::size_t> pretrain_jobs{0};
    std::atomic<std::size_t> training_jobs{0};
    std::atomic<std::size_t> cache_hits{0};
  };

  CoalitionLab(std::shared_ptr<const Experiment> exp, std::shared_ptr<const ResultCache> cache, std::size_t workers,
               std::shared_ptr<Shared> shared, std::string base_hash);
  void ensure_baselines(const std::vector<std::uint64_t>& seeds);

  std::shared_ptr<const Experiment> exp_;
  std::shared_ptr<const std::vector<rules::CollocationSet>> colloc_;
  std::shared_ptr<const ResultCache> cache_;
  std::size_t workers_;
  std::shared_ptr<Shared> shared_;
  std::string base_hash_;
};

/// Worker count from RULEWISE_WORKERS, else the hardware concurrency.
std::size_t default_workers();

/// Runs `count` independent jobs on up to `workers` threads. The first exception is
/// rethrown after every job has finished.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job);

}  // namespace rulewise::lab
