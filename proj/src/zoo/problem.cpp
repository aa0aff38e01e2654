#include "rulewise/zoo/problem.hpp"

#include "rulewise/common/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace rulewise::zoo {

namespace {

using rules::Region;
using rules::RuleKind;
using rules::RuleSpec;

constexpr double kPi = std::numbers::pi;

RuleSpec rule(const std::string& name, RuleKind kind, const std::string& eq, const Box& box,
              std::optional<std::size_t> face_axis = std::nullopt, double face_value = 0.0) {
  RuleSpec r;
  r.name = name;
  r.kind = kind;
  r.scope = rules::default_scope(kind);
  r.equation = eq;
  r.region = Region{box, face_axis, face_value};
  return r;
}

ad::NetworkSpec net(std::size_t in, std::size_t out, std::size_t hidden, ad::Activation a) {
  return ad::NetworkSpec{in, out, hidden, 50, a};
}

// Space-time problems share inputs (x, t), a single output u and a time cut.
ProblemDef space_time(ProblemId id, Box domain, std::vector<RuleSpec> rs, ad::Activation act,
                      std::size_t colloc, std::optional<std::size_t> rows) {
  ProblemDef p{id,
               {"x", "t"},
               {"u"},
               domain,
               rules::RuleSet({{"x", "t"}, {"u"}}, std::move(rs)),
               net(2, 1, 4, act),
               {{colloc, colloc}, 256},
               rows,
               !rows.has_value()};
  return p;
}

}  // namespace

std::string to_string(ProblemId id) {
  switch (id) {
    case ProblemId::Burgers: return "burgers";
    case ProblemId::KdV: return "kdv";
    case ProblemId::KleinGordon: return "klein_gordon";
    case ProblemId::ConvDiff: return "convdiff";
    case ProblemId::MultiVar: return "multivar";
    case ProblemId::Pde2D: return "pde2d";
  }
  return "unknown";
}

ProblemId parse_problem_id(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto id : all_problems()) {
    if (n == to_string(id)) return id;
  }
  if (n == "kg" || n == "kleingordon") return ProblemId::KleinGordon;
  throw ConfigError("unknown problem '" + name + "'");
}

const std::vector<ProblemId>& all_problems() {
  static const std::vector<ProblemId> ids = {ProblemId::Burgers,  ProblemId::KdV,      ProblemId::KleinGordon,
                                             ProblemId::ConvDiff, ProblemId::MultiVar, ProblemId::Pde2D};
  return ids;
}

std::string to_string(SplitMode mode) { return mode == SplitMode::InDistribution ? "in" : "out"; }

SplitMode parse_split_mode(const std::string& name) {
  if (name == "in" || name == "in_distribution") return SplitMode::InDistribution;
  if (name == "out" || name == "out_distribution") return SplitMode::OutDistribution;
  throw ConfigError("unknown split mode '" + name + "' (expected in or out)");
}

double pde2d_exact(double x, double y) { return x * x * std::exp(-y); }

ProblemDef make_problem(ProblemId id, MultivarMode mode) {
  switch (id) {
    case ProblemId::Burgers: {
      Box d{{{-1.0, 1.0}, {0.0, 1.0}}};
      return space_time(id, d,
                        {rule("pde", RuleKind::PdeResidual, "u_t + u*u_x - (0.01/pi)*u_xx = 0", d),
                         rule("ic", RuleKind::InitialCondition, "u = -sin(pi*x)", d, 1, 0.0),
                         rule("lbc", RuleKind::BoundaryCondition, "u = 0", d, 0, -1.0),
                         rule("rbc", RuleKind::BoundaryCondition, "u = 0", d, 0, 1.0)},
                        ad::Activation::Sin, 200, 25600);
    }
    case ProblemId::KdV: {
      Box d{{{-1.0, 1.0}, {0.0, 1.0}}};
      return space_time(id, d,
                        {rule("pde", RuleKind::PdeResidual, "u_t + u*u_x + 0.0025*u_xxx = 0", d),
                         rule("ic", RuleKind::InitialCondition, "u = cos(pi*x)", d, 1, 0.0),
                         rule("periodic", RuleKind::BoundaryCondition, "u = u@(x=1)", d, 0, -1.0)},
                        ad::Activation::Sin, 100, 102912);
    }
    case ProblemId::KleinGordon: {
      Box d{{{-1.0, 1.0}, {0.0, 3.0}}};
      return space_time(id, d,
                        {rule("pde", RuleKind::PdeResidual, "u_tt - 0.5*u_xx + 5*u = 0", d),
                         rule("ic", RuleKind::InitialCondition, "u = exp(-20*x^2)*(sin(pi*x) + sin(2*pi*x))", d, 1, 0.0),
                         rule("lbc", RuleKind::BoundaryCondition, "u = 0", d, 0, -1.0),
                         rule("rbc", RuleKind::BoundaryCondition, "u = 0", d, 0, 1.0)},
                        ad::Activation::Sin, 100, 40401);
    }
    case ProblemId::ConvDiff: {
      Box d{{{0.0, 2.0}, {0.0, 1.0}}};
      return space_time(id, d,
                        {rule("pde", RuleKind::PdeResidual, "u_t + u_x - 0.25*u_xx = 0", d),
                         rule("ic", RuleKind::InitialCondition, "u = sin(pi*x)*exp(-x)", d, 1, 0.0),
                         rule("lbc", RuleKind::BoundaryCondition, "u = 0", d, 0, 0.0),
                         rule("rbc", RuleKind::BoundaryCondition, "u = 0", d, 0, 2.0)},
                        ad::Activation::Tanh, 100, std::nullopt);
    }
    case ProblemId::MultiVar: {
      Box d{{{0.0, kPi}, {-kPi, 0.0}}};
      Box c = mode == MultivarMode::Outer ? Box{{{0.0, 2.0 * kPi}, {-kPi, 2.0 * kPi}}} : d;
      std::vector<RuleSpec> rs = {rule("c_rule", RuleKind::AlgebraicRelation, "c = abs(sin(a) - cos(b))", c),
                                  rule("d_rule", RuleKind::AlgebraicRelation, "d = log((a - b)^2 + 1)", c),
                                  rule("e_rule", RuleKind::AlgebraicRelation, "e = 0.5*(1 + c^2)", c),
                                  rule("f_rule", RuleKind::AlgebraicRelation, "f = exp(-e)", c),
                                  rule("positivity", RuleKind::InequalityConstraint, "e > 0; f > 0", c)};
      return ProblemDef{id,
                        {"a", "b"},
                        {"c", "d", "e", "f"},
                        d,
                        rules::RuleSet({{"a", "b"}, {"c", "d", "e", "f"}}, std::move(rs)),
                        net(2, 4, 2, ad::Activation::ReLU),
                        {{64, 64}, 256},
                        std::nullopt,
                        true};
    }
    case ProblemId::Pde2D: {
      Box d{{{0.0, 1.0}, {0.0, 1.0}}};
      std::vector<RuleSpec> rs = {rule("pde", RuleKind::PdeResidual, "u_xx - u_yyyy = (2 - x^2)*exp(-y)", d),
                                  rule("uyy_bottom", RuleKind::BoundaryCondition, "u_yy = x^2", d, 1, 0.0),
                                  rule("uyy_top", RuleKind::BoundaryCondition, "u_yy = x^2/e", d, 1, 1.0),
                                  rule("u_bottom", RuleKind::BoundaryCondition, "u = x^2", d, 1, 0.0),
                                  rule("u_top", RuleKind::BoundaryCondition, "u = x^2/e", d, 1, 1.0),
                                  rule("u_left", RuleKind::BoundaryCondition, "u = 0", d, 0, 0.0),
                                  rule("u_right", RuleKind::BoundaryCondition, "u = exp(-y)", d, 0, 1.0)};
      return ProblemDef{id,
                        {"x", "y"},
                        {"u"},
                        d,
                        rules::RuleSet({{"x", "y"}, {"u"}}, std::move(rs)),
                        // Tanh rather than ReLU: the residual needs u_xx and u_yyyy.
                        net(2, 1, 2, ad::Activation::Tanh),
                        {{100, 100}, 256},
                        std::nullopt,
                        true};
    }
  }
  throw ConfigError("unknown problem");
}

SplitRegions ProblemDef::regions(SplitMode mode) const {
  const Box dom = domain;
  auto inside = [dom](const Eigen::VectorXd& p) { return dom.contains(p); };
  if (mode == SplitMode::InDistribution) return {inside, inside, "domain", "domain"};
  switch (id) {
    case ProblemId::Burgers:
    case ProblemId::KdV:
    case ProblemId::ConvDiff:
    case ProblemId::KleinGordon: {
      const double cut = id == ProblemId::KleinGordon ? 1.5 : 0.5;
      const auto c = std::to_string(cut).substr(0, 3);
      return {[inside, cut](const Eigen::VectorXd& p) { return inside(p) && p[1] < cut; },
              [inside, cut](const Eigen::VectorXd& p) { return inside(p) && p[1] >= cut; }, "t<" + c, "t>=" + c};
    }
    case ProblemId::MultiVar: {
      Box test{{{kPi, 2.0 * kPi}, {kPi, 2.0 * kPi}}};
      return {inside, [test](const Eigen::VectorXd& p) { return test.contains(p); }, "a in [0,pi], b in [-pi,0]",
              "a in [pi,2pi], b in [pi,2pi]"};
    }
    case ProblemId::Pde2D: {
      Box test{{{0.25, 0.75}, {0.25, 0.75}}};
      return {[inside, test](const Eigen::VectorXd& p) { return inside(p) && !test.contains(p, 0.0); },
              [test](const Eigen::VectorXd& p) { return test.contains(p, 0.0); }, "outside [0.25,0.75]^2",
              "x,y in [0.25,0.75]"};
    }
  }
  return {inside, inside, "domain", "domain"};
}

}  // namespace rulewise::zoo
