#include "rulewise/orchestrator/commands.hpp"

#include "rulewise/common/atomic_file.hpp"
#include "rulewise/common/error.hpp"
#include "rulewise/common/text_format.hpp"
#include "rulewise/orchestrator/svg.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <sstream>

namespace rulewise::orchestrator {

namespace {

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::vector<std::string> rule_labels(const importance::ImportanceReport& r) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < r.ri.size(); ++i) out.push_back(std::to_string(i + 1));
  return out;
}

template <class Value, class Mutate>
StudyReport sweep(const ExperimentConfig& config, std::string kind, std::string parameter,
                  const std::vector<Value>& values, Mutate mutate) {
  StudyReport study{std::move(kind), std::move(parameter), {}};
  for (const auto& v : values) {
    auto cell_config = config;
    mutate(cell_config, v);
    StudyCell cell;
    cell.value = static_cast<double>(v);
    cell.label = fmt::format("{}", v);
    spdlog::info("{} study: {} = {}", study.kind, study.parameter, cell.label);
    try {
      cell.report = run_importance(cell_config);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      spdlog::error("{} = {} failed: {}", study.parameter, cell.label, e.what());
      cell.error = e.what();
    }
    study.cells.push_back(std::move(cell));
  }
  return study;
}

}  // namespace

importance::ImportanceReport run_importance(const ExperimentConfig& config) {
  const auto prepared = prepare(config);
  auto lab = make_lab(config, prepared);
  auto report = importance::analyze(lab, config.importance);
  const auto s = lab.stats();
  spdlog::info("{}: {} pre-training jobs, {} coalition jobs, {} cache hits", prepared.problem.name(),
               s.pretrain_jobs, s.training_jobs, s.cache_hits);
  return report;
}

nlohmann::json StudyReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json j = {{"label", c.label}, {"value", c.value}};
    if (c.report) j["report"] = c.report->to_json();
    if (!c.error.empty()) j["error"] = c.error;
    cs.push_back(j);
  }
  return {{"kind", kind}, {"parameter", parameter}, {"cells", cs}};
}

std::string StudyReport::to_csv() const {
  std::ostringstream out;
  out << parameter << ",rule,name,metric,value\n";
  for (const auto& c : cells) {
    if (!c.report) continue;
    std::istringstream rows(c.report->to_csv());
    std::string line;
    std::getline(rows, line);  // header
    while (std::getline(rows, line)) out << c.label << ',' << line << '\n';
  }
  return out.str();
}

StudyReport volume_study(const ExperimentConfig& config, const std::vector<std::size_t>& volumes) {
  return sweep(config, "volume", "train_volume", volumes,
               [](ExperimentConfig& c, std::size_t v) { c.split.train_volume = v; });
}

StudyReport noise_study(const ExperimentConfig& config, const std::vector<double>& levels) {
  return sweep(config, "noise", "noise", levels, [](ExperimentConfig& c, double v) { c.split.noise = v; });
}

StudyReport colloc_study(const ExperimentConfig& config, const std::vector<std::size_t>& sizes) {
  const auto dims = zoo::make_problem(config.problem).input_names.size();
  return sweep(config, "collocation", "points_per_axis", sizes, [dims](ExperimentConfig& c, std::size_t n) {
    c.collocation_interior = std::vector<std::size_t>(dims, n);
    c.collocation_face = n;
  });
}

std::vector<tuner::WeightingComparison> run_tuning(const ExperimentConfig& config) {
  const auto prepared = prepare(config);
  std::vector<tuner::WeightingComparison> out;
  for (auto seed : config.protocol.seeds) {
    Prepared one = prepared;
    one.experiment = tuner::single_seed(prepared.experiment, seed);
    auto lab = make_lab(config, one);
    spdlog::info("tuning weights for seed {}", seed);
    out.push_back(tuner::compare_weighting_methods(lab, config.tuning, config.tuning_importance));
  }
  return out;
}

importance::WrongRuleScan run_wrong_rules(const ExperimentConfig& config) {
  if (config.scenarios.empty()) throw ConfigError("wrong_rules.scenarios is empty");
  const auto prepared = prepare(config);
  auto lab = make_lab(config, prepared);
  return importance::wrong_rule_scan(lab, config.scenarios, config.importance, config.flag_threshold);
}

void write_report(const importance::ImportanceReport& report, const std::filesystem::path& dir, bool csv_only) {
  write_file_atomic(dir / "report.json", report.to_json().dump(1) + "\n");
  write_file_atomic(dir / "report.csv", report.to_csv());
  if (csv_only) return;
  const bool shapley = report.method == importance::Method::ShapleyWeighted;
  write_file_atomic(dir / "ri.svg", svg::bar_chart(fmt::format("{} rule importance", report.problem),
                                                   shapley ? "Shapley-weighted importance" : "RI",
                                                   rule_labels(report), report.headline(), report.ri_stderr));
  for (std::size_t i = 0; i < report.curves.size(); ++i) {
    std::vector<svg::BoxGroup> groups;
    for (const auto& p : report.curves[i]) groups.push_back({std::to_string(p.relying), p.values});
    write_file_atomic(dir / fmt::format("relying_rule{}.svg", i + 1),
                      svg::box_chart(fmt::format("rule {} marginal contributions", i + 1), "RI^r", groups));
  }
}

void write_study(const StudyReport& study, const std::filesystem::path& dir, bool csv_only) {
  write_file_atomic(dir / "study.json", study.to_json().dump(1) + "\n");
  write_file_atomic(dir / "study.csv", study.to_csv());
  if (csv_only) return;
  std::vector<std::string> cats;
  std::vector<svg::Series> series;
  for (const auto& c : study.cells) {
    cats.push_back(c.label);
    const auto n = c.report ? c.report->ri.size() : 0;
    if (series.size() < n) series.resize(n);
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    series[i].name = fmt::format("rule {}", i + 1);
    for (const auto& c : study.cells)
      series[i].y.push_back(c.report && i < c.report->ri.size() ? c.report->ri[i] : std::nan(""));
  }
  write_file_atomic(dir / "study.svg",
                    svg::line_chart(fmt::format("RI across {}", study.parameter), study.parameter, "RI", cats, series));
}

void write_tuning(const std::vector<tuner::WeightingComparison>& runs, const std::filesystem::path& dir,
                  bool csv_only) {
  nlohmann::json all = nlohmann::json::array();
  std::ostringstream table;
  table << "seed,method,applicable,test_mse,validation_mse,weights\n";
  for (const auto& run : runs) {
    all.push_back(run.to_json());
    for (const auto& r : run.rows) {
      std::string w;
      for (double x : r.weights) w += (w.empty() ? "" : ";") + format_double(x);
      table << run.seed << ',' << tuner::to_string(r.method) << ',' << (r.applicable ? 1 : 0) << ','
            << csv_number(r.test_mse) << ',' << csv_number(r.validation_mse) << ',' << w << '\n';
    }
    write_file_atomic(dir / fmt::format("trajectory_seed{}.csv", run.seed), run.tuning.trajectory_csv());
    if (csv_only) continue;
    std::vector<std::string> cats;
    svg::Series probe{"probe", {}}, best{"best accepted", {}};
    for (const auto& h : run.tuning.history) {
      cats.push_back(std::to_string(h.iteration));
      probe.y.push_back(std::isfinite(h.validation_loss) ? std::log10(h.validation_loss) : std::nan(""));
    }
    double b = std::numeric_limits<double>::infinity();
    for (const auto& h : run.tuning.history) {
      if (h.accepted) b = std::min(b, h.validation_loss);
      best.y.push_back(std::isfinite(b) ? std::log10(b) : std::nan(""));
    }
    write_file_atomic(dir / fmt::format("tuning_seed{}.svg", run.seed),
                      svg::line_chart(fmt::format("weight tuning, seed {}", run.seed), "iteration",
                                      "log10 validation loss", cats, {probe, best}));
  }
  write_file_atomic(dir / "tuning.json", all.dump(1) + "\n");
  write_file_atomic(dir / "weighting_methods.csv", table.str());
}

void write_wrong_rules(const importance::WrongRuleScan& scan, const std::filesystem::path& dir, bool csv_only) {
  write_file_atomic(dir / "wrong_rules.json", scan.to_json().dump(1) + "\n");
  std::ostringstream csv;
  csv << "scenario,perturbed_rule,rule,ri,delta_ri,flagged\n";
  for (const auto& s : scan.scenarios)
    for (std::size_t i = 0; i < s.report.ri.size(); ++i)
      csv << s.perturbation.id << ',' << s.perturbation.rule + 1 << ',' << i + 1 << ',' << csv_number(s.report.ri[i])
          << ',' << csv_number(s.delta_ri[i]) << ',' << (i == s.perturbation.rule && s.flagged ? 1 : 0) << '\n';
  write_file_atomic(dir / "wrong_rules.csv", csv.str());
  if (csv_only) return;
  for (const auto& s : scan.scenarios)
    write_file_atomic(dir / fmt::format("wrong_rules_{}.svg", s.perturbation.id),
                      svg::bar_chart(fmt::format("RI with rule {} replaced ({})", s.perturbation.rule + 1,
                                                 s.perturbation.id),
                                     "RI", rule_labels(s.report), s.report.ri));
}

}  // namespace rulewise::orchestrator
