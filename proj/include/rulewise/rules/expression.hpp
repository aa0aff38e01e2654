#pragma once

#include "rulewise/autodiff/jet.hpp"
#include "rulewise/autodiff/multi_index.hpp"
#include "rulewise/common/domain.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace rulewise::rules {

/// Parsed arithmetic expression over inputs, outputs and their derivatives.
///
/// Syntax: numbers, + - * / ^, parentheses, calls to sin cos tanh exp log sqrt
/// abs, the constants pi and e, input names (x, t, ...), output names (u, ...),
/// derivative names such as u_xx or u_xt, and site references such as
/// u@(x=1) which read a field at the current point with some coordinates fixed.
/// Names are resolved only when the expression is compiled against a problem.
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view text);

  /// Deterministic printed form; parse(canonical()) reproduces the same tree.
  [[nodiscard]] std::string canonical() const;
  [[nodiscard]] const Node& root() const { return *root_; }

 private:
  explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

struct Expression::Node {
  enum class Kind { Number, Name, Call, Negate, Binary, Site };
  Kind kind = Kind::Number;
  double number = 0.0;
  std::string name;  // identifier, function name, or operator for Binary
  std::vector<std::shared_ptr<const Node>> children;
  /// Site overrides: coordinate name and fixed value.
  std::vector<std::pair<std::string, double>> fixed;
};

enum class Relation { Equal, Greater, Less };

struct Statement {
  Expression lhs;
  Relation relation;
  Expression rhs;
};

/// "lhs = rhs" or "lhs > rhs", several separated by ';'.
std::vector<Statement> parse_statements(std::string_view text);

std::string canonical(const std::vector<Statement>& statements);

/// Names an expression may refer to.
struct Symbols {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

/// Where a field leaf is read: the collocation point itself (no overrides) or a
/// copy of it with some coordinates replaced.
struct SiteSpec {
  std::vector<std::pair<std::size_t, double>> fixed;  // (input axis, value)

  friend bool operator==(const SiteSpec&, const SiteSpec&) = default;
  [[nodiscard]] Points apply(const Points& points) const;
};

/// Supplies d^alpha output_k at the given points; used to evaluate residuals of
/// functions other than networks (closed-form solutions, reference data).
using FieldProvider =
    std::function<Eigen::ArrayXd(const Points& points, std::size_t output, const ad::MultiIndex& alpha)>;

/// A set of statements compiled into a vectorized tape. Each statement yields one
/// residual component g: lhs - rhs for '=' and '>', rhs - lhs for '<'. Equalities
/// are penalized by g^2, inequalities by max(0, -g)^2.
class CompiledResidual {
 public:
  CompiledResidual(const std::vector<Statement>& statements, const Symbols& symbols);

  [[nodiscard]] std::size_t components() const { return roots_.size(); }
  [[nodiscard]] bool inequality() const { return inequality_; }
  [[nodiscard]] const std::vector<SiteSpec>& sites() const { return sites_; }
  /// Highest total derivative order referenced.
  [[nodiscard]] unsigned max_order() const;

  /// components x n residual values of a network.
  [[nodiscard]] Eigen::MatrixXd residuals(const ad::Network& net, const Points& points) const;
  /// components x n residual values of an arbitrary field.
  [[nodiscard]] Eigen::MatrixXd residuals(const FieldProvider& field, const Points& points) const;

  /// Loss term whose kernel returns the summed penalty over points and components.
  [[nodiscard]] ad::LossTerm make_term(const Points& points, double scale) const;

 private:
  enum class Op { Const, Input, Leaf, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Tanh, Exp, Log, Sqrt, Abs };
  struct Instr {
    Op op;
    int a = -1;
    int b = -1;
    double value = 0.0;
    std::size_t leaf = 0;  // index into leaves_ for Op::Leaf, axis for Op::Input
  };
  struct Leaf {
    std::size_t site;
    std::size_t output;
    ad::MultiIndex alpha;
  };

  int emit(const Expression::Node& node);
  int push(Instr ins);
  std::size_t leaf_index(std::size_t site, std::size_t output, const ad::MultiIndex& alpha);

  void forward(const Points& points, const std::vector<Eigen::ArrayXd>& leaf_values,
               std::vector<Eigen::ArrayXd>& vals) const;
  void reverse(const std::vector<Eigen::ArrayXd>& vals, std::vector<Eigen::ArrayXd>& adj) const;
  [[nodiscard]] std::vector<ad::MultiIndex> site_requests(std::size_t site) const;

  Symbols symbols_;
  std::vector<Instr> tape_;
  std::vector<Leaf> leaves_;
  std::vector<SiteSpec> sites_;
  std::vector<int> roots_;
  bool inequality_ = false;
};

}  // namespace rulewise::rules
