#pragma once

#include "rulewise/autodiff/jet.hpp"
#include "rulewise/autodiff/network.hpp"
#include "rulewise/common/dataset.hpp"
#include "rulewise/rules/coalition.hpp"
#include "rulewise/rules/collocation.hpp"
#include "rulewise/rules/rule.hpp"

#include <vector>

namespace rulewise::rules {

/// Mean squared residual of rule i over its collocation set (mean over points
/// and statements; inequalities use the squared hinge).
double rule_loss(const RuleSet& rules, std::size_t i, const ad::Network& net, const CollocationSet& colloc);

/// Mean over samples and output channels of the squared error against `outputs`; 0 when empty.
double data_mse(const ad::Network& net, const Dataset& data);

/// Per-channel mean squared error against `clean_outputs` (the reference values).
Eigen::VectorXd channel_mse(const ad::Network& net, const Dataset& data);

/// Loss term computing data_mse times `scale` (targets are the observed outputs).
ad::LossTerm data_term(const Dataset& data, double scale = 1.0);

struct LossBreakdown {
  double data = 0.0;
  double rules = 0.0;  // weighted sum over active rules
  [[nodiscard]] double total() const { return data + rules; }
};

/// Data MSE plus the weighted losses of the rules in a coalition.
class CompositeObjective {
 public:
  CompositeObjective(const RuleSet& rules, Coalition coalition, const std::vector<CollocationSet>& colloc,
                     const Dataset& train);

  [[nodiscard]] const std::vector<ad::LossTerm>& terms() const { return terms_; }
  [[nodiscard]] double value(const ad::Network& net) const;
  [[nodiscard]] ad::ValueAndGradient value_and_gradient(const ad::Network& net) const;
  [[nodiscard]] LossBreakdown breakdown(const ad::Network& net) const;

 private:
  std::vector<ad::LossTerm> terms_;
  bool has_data_ = false;
};

double composite_loss(const RuleSet& rules, Coalition coalition, const ad::Network& net,
                      const std::vector<CollocationSet>& colloc, const Dataset& train);

}  // namespace rulewise::rules
