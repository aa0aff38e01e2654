#include "rulewise/rules/composite_loss.hpp"

#include <stdexcept>

namespace rulewise::rules {

namespace {

double rule_scale(const RuleSet& rules, std::size_t i, const CollocationSet& colloc) {
  if (colloc.size() == 0) throw std::invalid_argument("rule " + std::to_string(i + 1) + " has no collocation points");
  return 1.0 / (static_cast<double>(colloc.size()) * static_cast<double>(rules.residual(i).components()));
}

}  // namespace

double rule_loss(const RuleSet& rules, std::size_t i, const ad::Network& net, const CollocationSet& colloc) {
  std::vector<ad::LossTerm> t{rules.residual(i).make_term(colloc.points, rule_scale(rules, i, colloc))};
  return ad::loss_value(net, t);
}

ad::LossTerm data_term(const Dataset& data, double scale) {
  data.validate();
  ad::LossTerm term;
  term.scale = scale;
  term.sites.push_back({data.inputs, ad::JetPlan::values(data.input_dim())});
  term.kernel = [targets = data.outputs](std::span<const ad::OutputJets> jets, std::size_t begin, std::size_t end,
                                         std::span<Eigen::MatrixXd> adjoints) {
    const auto m = static_cast<Eigen::Index>(end - begin);
    const Eigen::MatrixXd diff =
        jets[0].coefficients.leftCols(m) - targets.middleCols(static_cast<Eigen::Index>(begin), m);
    adjoints[0].leftCols(m) += 2.0 * diff;
    return diff.squaredNorm();
  };
  return term;
}

double data_mse(const ad::Network& net, const Dataset& data) {
  if (data.empty()) return 0.0;
  const Eigen::MatrixXd diff = net.forward(data.inputs) - data.outputs;
  return diff.squaredNorm() / static_cast<double>(diff.size());
}

Eigen::VectorXd channel_mse(const ad::Network& net, const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("channel MSE of an empty dataset");
  const Eigen::MatrixXd diff = net.forward(data.inputs) - data.clean_outputs;
  return diff.rowwise().squaredNorm() / static_cast<double>(diff.cols());
}

CompositeObjective::CompositeObjective(const RuleSet& rules, Coalition coalition,
                                       const std::vector<CollocationSet>& colloc, const Dataset& train) {
  if (coalition.n != rules.size()) throw std::invalid_argument("coalition size does not match the rule set");
  if (colloc.size() != rules.size()) throw std::invalid_argument("one collocation set per rule is required");
  if (!train.empty()) {
    terms_.push_back(data_term(train, 1.0 / static_cast<double>(train.outputs.size())));
    has_data_ = true;
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const double w = rules.rule(i).weight;
    if (!coalition.contains(i) || w == 0.0) continue;
    terms_.push_back(rules.residual(i).make_term(colloc[i].points, w * rule_scale(rules, i, colloc[i])));
  }
}

double CompositeObjective::value(const ad::Network& net) const { return ad::loss_value(net, terms_); }

ad::ValueAndGradient CompositeObjective::value_and_gradient(const ad::Network& net) const {
  return ad::loss_gradient(net, terms_);
}

LossBreakdown CompositeObjective::breakdown(const ad::Network& net) const {
  const auto parts = ad::term_values(net, terms_);
  LossBreakdown b;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k == 0 && has_data_) b.data = parts[k];
    else b.rules += parts[k];
  }
  return b;
}

double composite_loss(const RuleSet& rules, Coalition coalition, const ad::Network& net,
                      const std::vector<CollocationSet>& colloc, const Dataset& train) {
  return CompositeObjective(rules, coalition, colloc, train).value(net);
}

}  // namespace rulewise::rules
