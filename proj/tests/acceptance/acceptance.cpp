// Acceptance runner: one [PASS]/[FAIL] line per criterion.
//
// Training-based criteria run at desk scale (reduced collocation grids and epoch
// caps, listed in the settings below) and share a result cache, so reruns are quick.
#include "rulewise/common/error.hpp"
#include "rulewise/importance/analysis.hpp"
#include "rulewise/importance/measures.hpp"
#include "rulewise/orchestrator/commands.hpp"
#include "rulewise/orchestrator/config.hpp"
#include "rulewise/tuner/tuner.hpp"
#include "rulewise/zoo/autodiff_check.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

using namespace rulewise;
namespace orc = rulewise::orchestrator;
using importance::MseTable;
using rules::Coalition;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::filesystem::path cache;
  std::size_t workers = 1;
};

const std::vector<std::uint64_t> kSeeds = {0, 1, 2};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Independent enumerators over raw mask-indexed vectors.

double delta(const std::vector<double>& v, std::size_t i, std::size_t m) {
  return std::log10(v[m & ~(std::size_t{1} << i)]) - std::log10(v[m]);
}

double brute_ri(const std::vector<double>& v, std::size_t i) {
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < v.size(); ++m)
    if (m >> i & 1) s += delta(v, i, m), ++count;
  return s / static_cast<double>(count);
}

double brute_ri_r(const std::vector<double>& v, std::size_t i, std::size_t r) {
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < v.size(); ++m)
    if ((m >> i & 1) && static_cast<std::size_t>(__builtin_popcountll(m)) == r + 1) s += delta(v, i, m), ++count;
  return s / static_cast<double>(count);
}

double brute_permutation(const std::vector<double>& v, std::size_t n, std::size_t i) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  double s = 0.0;
  double count = 0.0;
  do {
    std::size_t before = 0;
    for (auto k : order) {
      if (k == i) break;
      before |= std::size_t{1} << k;
    }
    s += delta(v, i, before | (std::size_t{1} << i));
    count += 1.0;
  } while (std::next_permutation(order.begin(), order.end()));
  return s / count;
}

double choose(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t j = 1; j <= k; ++j) r = r * static_cast<double>(n - k + j) / static_cast<double>(j);
  return r;
}

std::vector<double> random_table(std::size_t n, std::mt19937_64& g) {
  std::uniform_real_distribution<double> e(-9.0, 1.0);
  std::vector<double> v(std::size_t{1} << n);
  for (auto& x : v) x = std::pow(10.0, e(g));
  return v;
}

// ---------------------------------------------------------------------------

Outcome c1_formula_oracle(const Context&) {
  std::mt19937_64 g(2024);
  double worst = 0.0, worst_partition = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t) % 6;
    const auto v = random_table(n, g);
    const auto table = MseTable::from_values(n, v);
    for (std::size_t i = 0; i < n; ++i) {
      const double ri = importance::rule_importance(table, i);
      worst = std::max(worst, std::abs(ri - brute_ri(v, i)));
      worst = std::max(worst, std::abs(importance::full_importance(table, i) - delta(v, i, v.size() - 1)));
      worst = std::max(worst, std::abs(importance::shapley_weighted(table, i) - brute_permutation(v, n, i)));
      const auto curve = importance::relying_curve(table, i);
      double partition = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        worst = std::max(worst, std::abs(curve[r].mean - brute_ri_r(v, i, r)));
        partition += choose(n - 1, r) * curve[r].mean;
      }
      worst_partition = std::max(worst_partition, std::abs(std::pow(2.0, 1.0 - static_cast<double>(n)) * partition - ri));
    }
  }
  return {worst < 1e-12 && worst_partition < 1e-12,
          fmt::format("max deviation {:.2e}, partition identity {:.2e} over 50 tables", worst, worst_partition)};
}

Outcome c2_zero_scale(const Context&) {
  std::mt19937_64 g(7);
  double worst_const = 0.0, worst_scale = 0.0;
  for (std::size_t n = 1; n <= 7; ++n) {
    const auto c = MseTable::from_values(n, std::vector<double>(std::size_t{1} << n, 3.7e-4));
    const auto t = MseTable::from_values(n, random_table(n, g));
    const auto s = t.scaled(1e3);
    for (std::size_t i = 0; i < n; ++i) {
      for (double x : {importance::rule_importance(c, i), importance::full_importance(c, i),
                       importance::shapley_weighted(c, i)})
        worst_const = std::max(worst_const, std::abs(x));
      for (const auto& p : importance::relying_curve(c, i)) worst_const = std::max(worst_const, std::abs(p.mean));
      worst_scale = std::max(worst_scale, std::abs(importance::rule_importance(s, i) - importance::rule_importance(t, i)));
      worst_scale = std::max(worst_scale, std::abs(importance::full_importance(s, i) - importance::full_importance(t, i)));
      worst_scale =
          std::max(worst_scale, std::abs(importance::shapley_weighted(s, i) - importance::shapley_weighted(t, i)));
      const auto a = importance::relying_curve(s, i), b = importance::relying_curve(t, i);
      for (std::size_t r = 0; r < n; ++r) worst_scale = std::max(worst_scale, std::abs(a[r].mean - b[r].mean));
    }
  }
  return {worst_const == 0.0 && worst_scale < 1e-12,
          fmt::format("constant tables max |value| {:.1e}; x1e3 scaling max change {:.2e}", worst_const, worst_scale)};
}

Outcome c3_hand_case(const Context&) {
  const auto t = MseTable::from_values(2, {1e-1, 1e-2, 1e-1, 1e-3});
  const double ri1 = importance::rule_importance(t, 0), ri2 = importance::rule_importance(t, 1);
  const double fi1 = importance::full_importance(t, 0), fi2 = importance::full_importance(t, 1);
  const bool ok = std::abs(ri1 - 1.5) < 1e-15 && std::abs(ri2 - 0.5) < 1e-15 && std::abs(fi1 - 2.0) < 1e-15 &&
                  std::abs(fi2 - 1.0) < 1e-15;
  return {ok, fmt::format("RI = ({}, {}), FI = ({}, {})", ri1, ri2, fi1, fi2)};
}

Outcome c4_autodiff(const Context&) {
  const auto checks = zoo::validate_autodiff(zoo::all_problems(), {100, 0, 10});
  double worst12 = 0.0, worst34 = 0.0, worst_grad = 0.0;
  bool ok = true;
  for (const auto& c : checks) {
    ok = ok && c.passed();
    (c.order == 0 ? worst_grad : c.order <= 2 ? worst12 : worst34) =
        std::max(c.order == 0 ? worst_grad : c.order <= 2 ? worst12 : worst34, c.error);
  }
  return {ok, fmt::format("{} checks; worst error orders 1-2 {:.1e}, orders 3-4 {:.1e}, parameter gradients {:.1e}",
                          checks.size(), worst12, worst34, worst_grad)};
}

// ---------------------------------------------------------------------------
// Desk-scale experiment settings.

orc::ExperimentConfig base_config(zoo::ProblemId id, const Context& ctx) {
  orc::ExperimentConfig c;
  c.problem = id;
  c.protocol.seeds = kSeeds;
  c.cache_dir = ctx.cache;
  c.workers = ctx.workers;
  c.split.seed = 0;
  return c;
}

orc::ExperimentConfig pde2d_config(const Context& ctx) {
  auto c = base_config(zoo::ProblemId::Pde2D, ctx);
  c.split.train_volume = 0;
  c.split.test_volume = 2000;
  c.collocation_interior = std::vector<std::size_t>{32, 32};
  c.collocation_face = 64;
  return c;
}

orc::ExperimentConfig pde2d_scan_config(const Context& ctx) {
  auto c = pde2d_config(ctx);
  c.collocation_interior = std::vector<std::size_t>{12, 12};
  c.collocation_face = 24;
  c.protocol.finetune_epochs_max = 1500;
  c.protocol.plateau_patience = 200;
  return c;
}

orc::ExperimentConfig multivar_config(const Context& ctx) {
  auto c = base_config(zoo::ProblemId::MultiVar, ctx);
  c.split.train_volume = 0;
  c.split.test_volume = 2000;
  c.collocation_interior = std::vector<std::size_t>{16, 16};
  return c;
}

orc::ExperimentConfig convdiff_config(const Context& ctx, zoo::SplitMode mode) {
  auto c = base_config(zoo::ProblemId::ConvDiff, ctx);
  c.split.mode = mode;
  c.split.test_volume = 2000;
  c.collocation_interior = std::vector<std::size_t>{16, 16};
  c.collocation_face = 32;
  c.protocol.finetune_epochs_max = 2000;
  c.protocol.plateau_patience = 250;
  return c;
}

Outcome c5_pde2d_solve(const Context& ctx) {
  const auto cfg = pde2d_config(ctx);
  const auto prepared = orc::prepare(cfg);
  auto lab = orc::make_lab(cfg, prepared);
  const auto rs = lab.run({Coalition::full(lab.rule_count())});
  std::vector<double> mse;
  for (const auto& r : rs) mse.push_back(r.test_mse);
  const double m = median(mse);
  return {m < 1e-3, fmt::format("median test MSE {:.2e} over seeds ({:.2e}, {:.2e}, {:.2e})", m, mse[0], mse[1], mse[2])};
}

struct MultivarSweep {
  importance::ImportanceReport report;
  std::vector<importance::ImportanceReport> per_seed;
};

MultivarSweep& multivar_sweep(const Context& ctx) {
  static std::optional<MultivarSweep> sweep;
  if (!sweep) {
    const auto cfg = multivar_config(ctx);
    MultivarSweep s;
    s.report = orc::run_importance(cfg);
    // Per-seed reports from the same cached sweep, for the seed-median orderings.
    for (auto seed : cfg.protocol.seeds) {
      std::vector<lab::CoalitionResult> one;
      for (const auto& r : s.report.results)
        if (r.seed == seed) one.push_back(r);
      s.per_seed.push_back(importance::exact_report(importance::tabulate(one, 5, 4, false), importance::Method::Exact));
    }
    sweep = std::move(s);
  }
  return *sweep;
}

Outcome c6_outer_dependence(const Context& ctx) {
  const auto& rep = multivar_sweep(ctx).report;
  const std::size_t d = 1;  // channel order c, d, e, f
  std::vector<double> col;
  for (const auto& row : rep.per_variable) col.push_back(row[d]);
  const auto best = static_cast<std::size_t>(std::max_element(col.begin(), col.end()) - col.begin());
  return {best == 1, fmt::format("RI for channel d by rule: {:.3f}; argmax rule {}", fmt::join(col, ", "), best + 1)};
}

Outcome c7_substitution(const Context& ctx) {
  const auto& sweep = multivar_sweep(ctx);
  // Seed medians of |RI^r| for rules 2 and 5 and of RI per rule.
  std::vector<double> ri_med(5);
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<double> v;
    for (const auto& s : sweep.per_seed) v.push_back(s.ri[i]);
    ri_med[i] = median(v);
  }
  bool curve_ok = true;
  std::vector<std::string> parts;
  for (std::size_t r = 0; r < 5; ++r) {
    std::vector<double> a5, a2;
    for (const auto& s : sweep.per_seed) {
      a5.push_back(s.curves[4][r].mean);
      a2.push_back(s.curves[1][r].mean);
    }
    const double m5 = std::abs(median(a5)), m2 = std::abs(median(a2));
    curve_ok = curve_ok && m5 < m2;
    parts.push_back(fmt::format("r={}: {:.3f}<{:.3f}", r, m5, m2));
  }
  const bool smallest = std::min_element(ri_med.begin(), ri_med.end()) - ri_med.begin() == 4;
  return {curve_ok && smallest, fmt::format("|RI^r| rule 5 vs rule 2: {}; median RI {:.3f}", fmt::join(parts, " "),
                                            fmt::join(ri_med, ", "))};
}

double pde_rule_median(const Context& ctx, zoo::SplitMode mode, std::size_t volume, std::size_t rule,
                       std::vector<double>* per_seed = nullptr) {
  auto cfg = convdiff_config(ctx, mode);
  cfg.split.train_volume = volume;
  const auto rep = orc::run_importance(cfg);
  std::vector<double> v;
  for (auto seed : cfg.protocol.seeds) {
    std::vector<lab::CoalitionResult> one;
    for (const auto& r : rep.results)
      if (r.seed == seed) one.push_back(r);
    v.push_back(importance::rule_importance(importance::tabulate(one, 4, 1, false).aggregate, rule));
  }
  if (per_seed) *per_seed = v;
  return median(v);
}

Outcome c8_in_distribution(const Context& ctx) {
  const double lo = pde_rule_median(ctx, zoo::SplitMode::InDistribution, 10, 0);
  const double hi = pde_rule_median(ctx, zoo::SplitMode::InDistribution, 1000, 0);
  return {hi < lo, fmt::format("PDE rule median RI: {:.3f} at 10 points, {:.3f} at 1000", lo, hi)};
}

Outcome c9_out_distribution(const Context& ctx) {
  std::vector<double> pde10, pde1000, ic10, ic1000;
  const double pde_lo = pde_rule_median(ctx, zoo::SplitMode::OutDistribution, 10, 0, &pde10);
  const double pde_hi = pde_rule_median(ctx, zoo::SplitMode::OutDistribution, 1000, 0, &pde1000);
  const double ic_lo = pde_rule_median(ctx, zoo::SplitMode::OutDistribution, 10, 1, &ic10);
  const double ic_hi = pde_rule_median(ctx, zoo::SplitMode::OutDistribution, 1000, 1, &ic1000);
  return {pde_hi > pde_lo && ic_hi < ic_lo,
          fmt::format("PDE rule {:.3f} -> {:.3f} (seeds {:.2f} -> {:.2f}), IC rule {:.3f} -> {:.3f} (seeds {:.2f} -> "
                      "{:.2f}), 10 -> 1000 points",
                      pde_lo, pde_hi, fmt::join(pde10, "/"), fmt::join(pde1000, "/"), ic_lo, ic_hi,
                      fmt::join(ic10, "/"), fmt::join(ic1000, "/"))};
}

Outcome c10_tuning(const Context& ctx) {
  auto cfg = multivar_config(ctx);
  cfg.split.train_volume = 100;
  const auto runs = orc::run_tuning(cfg);
  bool ok = true;
  std::vector<std::string> parts;
  for (const auto& run : runs) {
    const double def = run.row(tuner::WeightingMethod::Default).test_mse;
    const double ours = run.row(tuner::WeightingMethod::Ours).test_mse;
    ok = ok && ours <= def;
    parts.push_back(fmt::format("seed {}: {:.2e} -> {:.2e}", run.seed, def, ours));
  }
  return {ok, fmt::format("default -> tuned test MSE {}; reference magnitudes 1.9e-4 -> 4.9e-5", fmt::join(parts, ", "))};
}

Outcome c11_wrong_rule(const Context& ctx) {
  auto cfg = pde2d_scan_config(ctx);
  // Rule 6 is u(0, y) = 0.
  cfg.scenarios = {{"u0_offset", 5, "u = 0.1"}, {"identity", 5, "u = 0"}};
  const auto scan = orc::run_wrong_rules(cfg);
  const auto& bad = scan.scenarios[0];
  const auto& same = scan.scenarios[1];
  const double ri6 = bad.report.ri[5];
  return {bad.flagged && bad.minimum && !same.flagged,
          fmt::format("perturbed rule 6 RI {:.3f} (minimum: {}), FI {:.3f}; identity RI {:.3f}, flagged: {}", ri6,
                      bad.minimum ? "yes" : "no", bad.report.fi[5], same.report.ri[5], same.flagged ? "yes" : "no")};
}

Outcome c12_monte_carlo(const Context&) {
  std::mt19937_64 g(99);
  const auto v = random_table(7, g);
  const auto t = MseTable::from_values(7, v);
  const std::size_t rule = 3;
  const double exact = brute_ri(v, rule);
  int covered = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto est = importance::monte_carlo_ri([&](Coalition c) { return t.at(c.mask); }, 7, rule, 500, trial);
    if (std::abs(est.estimate - exact) <= 3.0 * est.standard_error) ++covered;
  }
  return {covered >= 99, fmt::format("{} of 100 estimates within 3 standard errors of RI = {:.4f}", covered, exact)};
}

Outcome c13_engineering(const Context& ctx) {
  // Warm rerun of the outer-dependence sweep against the same cache.
  const auto cfg = multivar_config(ctx);
  const auto first = multivar_sweep(ctx).report.to_json().dump();
  const auto prepared = orc::prepare(cfg);
  auto warm = orc::make_lab(cfg, prepared);
  const auto again = importance::analyze(warm, cfg.importance);
  const auto stats = warm.stats();
  const bool identical = again.to_json().dump() == first;

  // Serial against eight workers, uncached, on a shortened protocol.
  auto quick = multivar_config(ctx);
  quick.cache_dir.reset();
  quick.protocol.seeds = {0};
  quick.protocol.pretrain_epochs_max = 200;
  quick.protocol.finetune_epochs_max = 200;
  const auto qp = orc::prepare(quick);
  const auto all = rules::enumerate_coalitions(5);
  quick.workers = 1;
  auto serial = orc::make_lab(quick, qp).run(all);
  quick.workers = 8;
  auto parallel = orc::make_lab(quick, qp).run(all);
  std::reverse(parallel.begin(), parallel.end());  // compare as multisets
  auto key = [](const lab::CoalitionResult& a, const lab::CoalitionResult& b) {
    return std::tie(a.seed, a.coalition.mask) < std::tie(b.seed, b.coalition.mask);
  };
  std::sort(serial.begin(), serial.end(), key);
  std::sort(parallel.begin(), parallel.end(), key);
  const bool same = serial == parallel;
  return {stats.training_jobs == 0 && stats.pretrain_jobs == 0 && identical && same,
          fmt::format("warm rerun: {} training jobs, {} pre-training jobs, report identical: {}; serial vs 8 workers "
                      "identical over {} results: {}",
                      stats.training_jobs, stats.pretrain_jobs, identical ? "yes" : "no", serial.size(),
                      same ? "yes" : "no")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(const Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rulewise acceptance criteria"};
  std::vector<int> selected;
  Context ctx;
  std::string cache = "acceptance-cache";
  std::string level = "warn";
  app.add_option("--criteria", selected, "criterion numbers (default: all)")->delimiter(',');
  app.add_option("--cache", cache, "result cache directory")->capture_default_str();
  app.add_option("--workers", ctx.workers, "parallel coalition jobs")->capture_default_str();
  app.add_option("--log-level", level)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  ctx.cache = cache;
  spdlog::set_level(spdlog::level::from_str(level));

  const std::vector<Criterion> criteria = {
      {1, "formula oracle", c1_formula_oracle},
      {2, "zero and scale properties", c2_zero_scale},
      {3, "hand-checked two-rule table", c3_hand_case},
      {4, "autodiff validation suite", c4_autodiff},
      {5, "exact-solution PDE solve", c5_pde2d_solve},
      {6, "outer dependence", c6_outer_dependence},
      {7, "substitution", c7_substitution},
      {8, "in-distribution volume trend", c8_in_distribution},
      {9, "out-distribution volume trend", c9_out_distribution},
      {10, "weight tuning", c10_tuning},
      {11, "wrong-rule detection", c11_wrong_rule},
      {12, "Monte Carlo estimator", c12_monte_carlo},
      {13, "engineering invariants", c13_engineering},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("[{}] C{} {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail, secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
