// Command-line front end: data generation, importance sweeps, studies, tuning and checks.
#include "rulewise/common/atomic_file.hpp"
#include "rulewise/common/error.hpp"
#include "rulewise/common/text_format.hpp"
#include "rulewise/orchestrator/commands.hpp"
#include "rulewise/orchestrator/config.hpp"
#include "rulewise/zoo/autodiff_check.hpp"
#include "rulewise/zoo/data.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <iostream>

using namespace rulewise;
namespace orc = rulewise::orchestrator;

namespace {

enum Exit { kOk = 0, kConfig = 1, kData = 2, kTraining = 3 };

struct Globals {
  std::string log_level = "info";
  std::size_t workers = 0;
  std::string cache_dir;
  std::string out_dir;
  bool csv_only = false;
};

orc::ExperimentConfig load(const std::string& path, const Globals& g) {
  auto c = orc::load_config(path);
  if (!g.cache_dir.empty()) c.cache_dir = g.cache_dir;
  if (g.workers > 0) c.workers = g.workers;
  if (!g.out_dir.empty()) c.output_dir = g.out_dir;
  if (g.csv_only) c.csv_only = true;
  orc::apply_environment(c);
  return c;
}

void write_provenance(const orc::ExperimentConfig& c) {
  write_file_atomic(c.output_dir / "config.json", c.to_json().dump(1) + "\n");
  try {
    const auto p = orc::prepare(c);
    write_file_atomic(c.output_dir / "split.json", zoo::to_json(p.manifest).dump(1) + "\n");
  } catch (const Error&) {
    // the command itself reports data problems
  }
}

void print_report(const importance::ImportanceReport& r) {
  fmt::print("{} ({}; seeds {})\n", r.problem, importance::to_string(r.method), fmt::join(r.seeds, ","));
  fmt::print("{:>5} {:>12} {:>12} {:>12}\n", "rule", r.method == importance::Method::MonteCarlo ? "RI (MC)" : "RI",
             "FI", r.method == importance::Method::MonteCarlo ? "stderr" : "Shapley");
  for (std::size_t i = 0; i < r.ri.size(); ++i) {
    const double third = r.method == importance::Method::MonteCarlo ? r.ri_stderr[i] : r.shapley[i];
    fmt::print("{:>5} {:>12.4f} {:>12.4f} {:>12.4f}  {}\n", i + 1, r.ri[i], r.fi[i], third, r.rule_names[i]);
  }
}

int run_validate(std::size_t points, std::uint64_t seed, const std::vector<std::string>& names,
                 const std::string& out) {
  std::vector<zoo::ProblemId> problems;
  for (const auto& n : names) problems.push_back(zoo::parse_problem_id(n));
  if (problems.empty()) problems = zoo::all_problems();
  const auto checks = zoo::validate_autodiff(problems, {points, seed, 10});
  std::string csv = "problem,architecture,quantity,order,error,tolerance,passed,skipped\n";
  bool ok = true;
  for (const auto& c : checks) {
    fmt::print("{:<13} {:<10} {:<20} order {} error {:.2e} (< {:.0e}) {}\n", c.problem, c.architecture, c.quantity,
               c.order, c.error, c.tolerance, c.passed() ? "ok" : "FAILED");
    csv += fmt::format("{},{},{},{},{},{},{},{}\n", c.problem, c.architecture, c.quantity, c.order,
                       format_double(c.error), format_double(c.tolerance), c.passed() ? 1 : 0, c.skipped);
    ok = ok && c.passed();
  }
  if (!out.empty()) write_file_atomic(std::filesystem::path(out) / "autodiff.csv", csv);
  fmt::print("{} of {} checks passed\n", std::count_if(checks.begin(), checks.end(), [](auto& c) { return c.passed(); }),
             checks.size());
  return ok ? kOk : kTraining;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule importance for informed machine learning"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")->capture_default_str();
  app.add_option("--workers", g.workers, "parallel coalition jobs (default: RULEWISE_WORKERS or all cores)");
  app.add_option("--cache-dir", g.cache_dir, "result cache root (default: RULEWISE_CACHE_DIR or none)");
  app.add_option("--out", g.out_dir, "output directory, overriding the config");
  app.add_flag("--csv-only", g.csv_only, "skip SVG plots");

  std::string config_path;
  auto with_config = [&](CLI::App* sub) { sub->add_option("-c,--config", config_path, "JSON config")->required(); };

  auto* gen = app.add_subcommand("gen-data", "write the reference dataset of a self-generated problem");
  std::string problem_name, out_file = "data.csv", mode = "outer";
  std::vector<std::size_t> grid;
  gen->add_option("problem", problem_name)->required();
  gen->add_option("--grid", grid, "points per axis (multivar, pde2d) or space,time points (convdiff)")->delimiter(',');
  gen->add_option("-o,--output", out_file)->capture_default_str();
  gen->add_option("--multivar-mode", mode, "outer or inner")->capture_default_str();

  auto* ingest = app.add_subcommand("ingest-check", "validate a dataset file against a problem");
  std::string data_file;
  bool partial = false;
  ingest->add_option("problem", problem_name)->required();
  ingest->add_option("file", data_file)->required();
  ingest->add_flag("--partial", partial, "do not require the full reference grid");

  auto* imp = app.add_subcommand("importance", "coalition sweep and rule importance");
  with_config(imp);
  std::string method;
  std::size_t samples = 0;
  imp->add_option("--method", method, "exact, monte_carlo or shapley_weighted");
  imp->add_option("--samples", samples, "Monte Carlo samples per rule");

  auto* vol = app.add_subcommand("volume-study", "importance across training data volumes");
  with_config(vol);
  std::vector<std::size_t> volumes;
  vol->add_option("--volumes", volumes)->delimiter(',');

  auto* noise = app.add_subcommand("noise-study", "importance across observation noise levels");
  with_config(noise);
  std::vector<double> levels;
  noise->add_option("--levels", levels)->delimiter(',');

  auto* colloc = app.add_subcommand("colloc-study", "importance across collocation grid sizes");
  with_config(colloc);
  std::vector<std::size_t> sizes;
  colloc->add_option("--sizes", sizes, "points per axis")->delimiter(',');

  auto* relying = app.add_subcommand("relying-curve", "RI^r curves and box plots from an exact sweep");
  with_config(relying);
  std::size_t rule = 0;
  relying->add_option("--rule", rule, "1-based rule (default: all)");

  auto* tune = app.add_subcommand("tune-weights", "importance-driven weight tuning and method comparison");
  with_config(tune);

  auto* wrong = app.add_subcommand("detect-wrong-rules", "importance under perturbed rules");
  with_config(wrong);

  auto* vad = app.add_subcommand("validate-autodiff", "input and parameter derivatives against finite differences");
  std::size_t points = 100;
  std::uint64_t seed = 0;
  std::vector<std::string> problems;
  vad->add_option("--points", points)->capture_default_str();
  vad->add_option("--seed", seed)->capture_default_str();
  vad->add_option("--problem", problems, "restrict to these problems");

  auto* rep = app.add_subcommand("report", "re-render CSV and plots from a saved report.json");
  std::string report_file;
  rep->add_option("report", report_file)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(g.log_level));
    spdlog::set_pattern("[%H:%M:%S] [%l] %v");

    if (gen->parsed()) {
      const auto id = zoo::parse_problem_id(problem_name);
      const auto p = zoo::make_problem(id, mode == "inner" ? zoo::MultivarMode::Inner : zoo::MultivarMode::Outer);
      Dataset d;
      if (grid.empty()) {
        orc::ExperimentConfig c;
        c.problem = id;
        d = orc::load_dataset(c, p);
      } else if (id == zoo::ProblemId::MultiVar) {
        d = zoo::generate_multivar(grid, p.domain);
      } else if (id == zoo::ProblemId::Pde2D) {
        d = zoo::generate_pde2d(grid);
      } else if (id == zoo::ProblemId::ConvDiff && grid.size() == 2) {
        d = zoo::solve_convdiff_fd(grid[0], grid[1]);
      } else if (id == zoo::ProblemId::ConvDiff) {
        throw ConfigError("convdiff --grid takes space,time point counts");
      } else {
        d = zoo::reference_data(p);  // ingest-only problems raise a data error here
      }
      write_csv(d, out_file);
      fmt::print("wrote {} rows to {}\n", d.size(), out_file);
      return kOk;
    }
    if (ingest->parsed()) {
      const auto p = zoo::make_problem(zoo::parse_problem_id(problem_name));
      const auto d = zoo::ingest_dataset(data_file, p, {!partial});
      fmt::print("{}: {} rows, inputs {}, outputs {}\n", p.name(), d.size(), fmt::join(d.input_names, ","),
                 fmt::join(d.output_names, ","));
      return kOk;
    }
    if (vad->parsed()) return run_validate(points, seed, problems, g.out_dir);
    if (rep->parsed()) {
      const auto r = importance::report_from_json(nlohmann::json::parse(read_file(report_file)));
      const auto dir = g.out_dir.empty() ? std::filesystem::path(report_file).parent_path() : std::filesystem::path(g.out_dir);
      orc::write_report(r, dir, g.csv_only);
      print_report(r);
      return kOk;
    }

    auto c = load(config_path, g);
    write_provenance(c);
    if (imp->parsed()) {
      if (!method.empty()) c.importance.method = importance::parse_method(method);
      if (samples > 0) c.importance.samples = samples;
      const auto r = orc::run_importance(c);
      orc::write_report(r, c.output_dir, c.csv_only);
      print_report(r);
    } else if (vol->parsed()) {
      orc::write_study(orc::volume_study(c, volumes.empty() ? c.volumes : volumes), c.output_dir, c.csv_only);
    } else if (noise->parsed()) {
      orc::write_study(orc::noise_study(c, levels.empty() ? c.noise_levels : levels), c.output_dir, c.csv_only);
    } else if (colloc->parsed()) {
      orc::write_study(orc::colloc_study(c, sizes.empty() ? c.collocation_sizes : sizes), c.output_dir, c.csv_only);
    } else if (relying->parsed()) {
      if (c.importance.method == importance::Method::MonteCarlo) c.importance.method = importance::Method::Exact;
      const auto r = orc::run_importance(c);
      if (rule > r.ri.size()) throw ConfigError(fmt::format("--rule {} out of range", rule));
      orc::write_report(r, c.output_dir, c.csv_only);
      std::string csv = "rule,r,mean,coalition,value\n";
      for (std::size_t i = 0; i < r.curves.size(); ++i) {
        if (rule != 0 && i + 1 != rule) continue;
        for (const auto& p : r.curves[i]) {
          for (std::size_t k = 0; k < p.values.size(); ++k)
            csv += fmt::format("{},{},{},\"{}\",{}\n", i + 1, p.relying, format_double(p.mean),
                               p.coalitions[k].to_string(), format_double(p.values[k]));
          fmt::print("rule {} r={} mean {:.4f} over {} coalitions\n", i + 1, p.relying, p.mean, p.values.size());
        }
      }
      write_file_atomic(c.output_dir / "relying_curves.csv", csv);
    } else if (tune->parsed()) {
      const auto runs = orc::run_tuning(c);
      orc::write_tuning(runs, c.output_dir, c.csv_only);
      for (const auto& run : runs)
        for (const auto& row : run.rows)
          fmt::print("seed {} {:<14} {}\n", run.seed, tuner::to_string(row.method),
                     row.applicable ? fmt::format("test MSE {:.3e}  weights {}", row.test_mse,
                                                  fmt::join(row.weights, ","))
                                    : std::string("n/a"));
    } else if (wrong->parsed()) {
      const auto scan = orc::run_wrong_rules(c);
      orc::write_wrong_rules(scan, c.output_dir, c.csv_only);
      for (const auto& s : scan.scenarios)
        fmt::print("{}: rule {} RI {:.4f} {}\n", s.perturbation.id, s.perturbation.rule + 1,
                   s.report.ri[s.perturbation.rule], s.flagged ? "FLAGGED" : "not flagged");
    }
    return kOk;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kData;
  } catch (const TrainingError& e) {
    spdlog::error("training failure: {}", e.what());
    return kTraining;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("malformed JSON: {}", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  }
}
