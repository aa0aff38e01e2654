#include "rulewise/rules/rule.hpp"

#include "rulewise/common/error.hpp"
#include "rulewise/common/text_format.hpp"

#include <cmath>

namespace rulewise::rules {

std::string to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::PdeResidual: return "pde";
    case RuleKind::InitialCondition: return "initial_condition";
    case RuleKind::BoundaryCondition: return "boundary_condition";
    case RuleKind::AlgebraicRelation: return "algebraic";
    case RuleKind::InequalityConstraint: return "inequality";
  }
  return "unknown";
}

std::string to_string(Scope scope) { return scope == Scope::Global ? "global" : "local"; }

Scope default_scope(RuleKind kind) {
  return kind == RuleKind::InitialCondition || kind == RuleKind::BoundaryCondition ? Scope::Local : Scope::Global;
}

bool Region::contains(const Eigen::Ref<const Eigen::VectorXd>& p, double tol) const {
  if (!box.contains(p, tol)) return false;
  return !face_axis || std::abs(p[static_cast<Eigen::Index>(*face_axis)] - face_value) <= tol;
}

std::string Region::describe(const std::vector<std::string>& input_names) const {
  if (!face_axis) return "domain";
  return input_names.at(*face_axis) + "=" + format_double(face_value);
}

RuleSet::RuleSet(Symbols symbols, std::vector<RuleSpec> rules) : symbols_(std::move(symbols)), rules_(std::move(rules)) {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    auto& r = rules_[i];
    r.index = i + 1;
    if (!(r.weight >= 0.0) || !std::isfinite(r.weight))
      throw ConfigError("rule " + std::to_string(i + 1) + " weight must be finite and non-negative");
    if (r.region.box.dim() != symbols_.inputs.size())
      throw ConfigError("rule " + std::to_string(i + 1) + " region does not match the problem inputs");
    if (r.region.face_axis && *r.region.face_axis >= symbols_.inputs.size())
      throw ConfigError("rule " + std::to_string(i + 1) + " face axis out of range");
    const auto statements = parse_statements(r.equation);
    CompiledResidual c(statements, symbols_);
    if ((r.kind == RuleKind::InequalityConstraint) != c.inequality())
      throw ConfigError("rule " + std::to_string(i + 1) + ": inequality rules must use '<' or '>', others '='");
    compiled_.push_back(std::move(c));
    canonical_.push_back(canonical(statements));
  }
}

std::vector<double> RuleSet::weights() const {
  std::vector<double> w;
  for (const auto& r : rules_) w.push_back(r.weight);
  return w;
}

RuleSet RuleSet::with_weights(const std::vector<double>& weights) const {
  if (weights.size() != rules_.size()) throw std::invalid_argument("weight vector length does not match rule count");
  auto rules = rules_;
  for (std::size_t i = 0; i < rules.size(); ++i) rules[i].weight = weights[i];
  return RuleSet(symbols_, std::move(rules));
}

RuleSet RuleSet::with_equation(std::size_t i, const std::string& equation) const {
  auto rules = rules_;
  rules.at(i).equation = equation;
  return RuleSet(symbols_, std::move(rules));
}

RuleSet RuleSet::without(std::size_t i) const {
  auto rules = rules_;
  rules.erase(rules.begin() + static_cast<std::ptrdiff_t>(i));
  return RuleSet(symbols_, std::move(rules));
}

}  // namespace rulewise::rules
