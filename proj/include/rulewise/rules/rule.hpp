#pragma once

#include "rulewise/common/domain.hpp"
#include "rulewise/rules/expression.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rulewise::rules {

enum class RuleKind { PdeResidual, InitialCondition, BoundaryCondition, AlgebraicRelation, InequalityConstraint };
enum class Scope { Global, Local };

std::string to_string(RuleKind kind);
std::string to_string(Scope scope);

/// PDE residuals, algebraic relations and inequalities constrain the whole domain;
/// initial and boundary conditions only a face.
Scope default_scope(RuleKind kind);

/// A full box, or the face of it where one coordinate is fixed.
struct Region {
  Box box;
  std::optional<std::size_t> face_axis;
  double face_value = 0.0;

  [[nodiscard]] bool is_face() const { return face_axis.has_value(); }
  [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& p, double tol = 1e-12) const;
  [[nodiscard]] std::string describe(const std::vector<std::string>& input_names) const;
};

struct RuleSpec {
  std::size_t index = 1;  // 1-based, as reported
  std::string name;
  RuleKind kind = RuleKind::PdeResidual;
  Scope scope = Scope::Global;
  std::string equation;
  double weight = 1.0;
  Region region;
};

/// Rules sharing one set of input/output names, with their compiled residuals.
class RuleSet {
 public:
  RuleSet(Symbols symbols, std::vector<RuleSpec> rules);

  [[nodiscard]] std::size_t size() const { return rules_.size(); }
  [[nodiscard]] const Symbols& symbols() const { return symbols_; }
  [[nodiscard]] const RuleSpec& rule(std::size_t i) const { return rules_.at(i); }
  [[nodiscard]] const std::vector<RuleSpec>& rules() const { return rules_; }
  [[nodiscard]] const CompiledResidual& residual(std::size_t i) const { return compiled_.at(i); }
  /// Canonical equation text used in digests, so cosmetic edits do not change them.
  [[nodiscard]] const std::string& canonical_equation(std::size_t i) const { return canonical_.at(i); }
  [[nodiscard]] std::vector<double> weights() const;

  /// Copies with one aspect changed; indices of remaining rules are renumbered 1..N.
  [[nodiscard]] RuleSet with_weights(const std::vector<double>& weights) const;
  [[nodiscard]] RuleSet with_equation(std::size_t i, const std::string& equation) const;
  [[nodiscard]] RuleSet without(std::size_t i) const;

 private:
  Symbols symbols_;
  std::vector<RuleSpec> rules_;
  std::vector<CompiledResidual> compiled_;
  std::vector<std::string> canonical_;
};

}  // namespace rulewise::rules
