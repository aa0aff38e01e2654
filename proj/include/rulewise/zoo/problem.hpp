#pragma once

#include "rulewise/autodiff/network.hpp"
#include "rulewise/common/domain.hpp"
#include "rulewise/rules/collocation.hpp"
#include "rulewise/rules/rule.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rulewise::zoo {

enum class ProblemId { Burgers, KdV, KleinGordon, ConvDiff, MultiVar, Pde2D };

std::string to_string(ProblemId id);
/// Accepts burgers, kdv, klein_gordon (or kg), convdiff, multivar, pde2d.
ProblemId parse_problem_id(const std::string& name);
const std::vector<ProblemId>& all_problems();

/// Where the algebraic rules of the multivariable system are enforced: the
/// enlarged box a in [0, 2pi], b in [-pi, 2pi] or only the training domain.
enum class MultivarMode { Outer, Inner };

enum class SplitMode { InDistribution, OutDistribution };

std::string to_string(SplitMode mode);
SplitMode parse_split_mode(const std::string& name);

/// Row predicates for the train and test pools of one split mode.
struct SplitRegions {
  std::function<bool(const Eigen::VectorXd&)> train;
  std::function<bool(const Eigen::VectorXd&)> test;
  std::string train_description;
  std::string test_description;
};

struct ProblemDef {
  ProblemId id = ProblemId::Burgers;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;
  Box domain;
  rules::RuleSet rules;
  ad::NetworkSpec default_net;
  rules::CollocationShape default_collocation;
  /// Rows of the published full-grid reference file, for ingest-only problems.
  std::optional<std::size_t> full_grid_rows;
  bool self_generated = false;

  [[nodiscard]] std::string name() const { return to_string(id); }
  [[nodiscard]] SplitRegions regions(SplitMode mode) const;
};

ProblemDef make_problem(ProblemId id, MultivarMode mode = MultivarMode::Outer);

/// Closed-form solution of the two-dimensional fourth-order problem: x^2 exp(-y).
double pde2d_exact(double x, double y);

}  // namespace rulewise::zoo
