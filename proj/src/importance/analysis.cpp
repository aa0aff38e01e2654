#include "rulewise/importance/analysis.hpp"

#include "rulewise/common/error.hpp"

#include <algorithm>
#include <set>

namespace rulewise::importance {

namespace {

std::uint64_t rule_seed(std::uint64_t seed, std::size_t i) { return seed + 0x9E3779B97F4A7C15ULL * (i + 1); }

}  // namespace

ImportanceReport analyze(lab::CoalitionLab& lab, const AnalysisOptions& options) {
  const auto& exp = lab.experiment();
  const auto n = lab.rule_count();
  const auto channels = exp.rules.symbols().outputs.size();
  if (n == 0) throw ConfigError("importance needs at least one rule");

  ImportanceReport rep;
  if (options.method == Method::MonteCarlo) {
    if (options.samples == 0) throw ConfigError("Monte Carlo needs at least one sample");
    std::set<rules::Coalition> needed;
    const auto full = rules::Coalition::full(n);
    needed.insert(full);
    for (std::size_t i = 0; i < n; ++i) {
      needed.insert(full.without(i));
      for (const auto& s : sample_coalitions(n, i, options.samples, rule_seed(options.sample_seed, i))) {
        needed.insert(s);
        needed.insert(s.without(i));
      }
    }
    rep.results = lab.run({needed.begin(), needed.end()});
    const auto tables = tabulate(rep.results, n, channels, exp.protocol.exclude_failed);
    rep.method = Method::MonteCarlo;
    rep.sample_count = options.samples;
    rep.sample_seed = options.sample_seed;
    rep.seeds = tables.seeds;
    rep.per_variable.assign(n, std::vector<double>(channels));
    for (std::size_t i = 0; i < n; ++i) {
      const auto seed = rule_seed(options.sample_seed, i);
      const auto est = monte_carlo_ri([&](rules::Coalition c) { return tables.aggregate.at(c.mask); }, n, i,
                                      options.samples, seed);
      rep.ri.push_back(est.estimate);
      rep.ri_stderr.push_back(est.standard_error);
      rep.fi.push_back(full_importance(tables.aggregate, i));
      for (std::size_t c = 0; c < channels; ++c) {
        const auto& t = tables.channel_aggregate[c];
        rep.per_variable[i][c] =
            monte_carlo_ri([&](rules::Coalition s) { return t.at(s.mask); }, n, i, options.samples, seed).estimate;
      }
    }
  } else {
    auto results = lab.run(rules::enumerate_coalitions(n));
    rep = exact_report(tabulate(results, n, channels, exp.protocol.exclude_failed), options.method);
    rep.results = std::move(results);
  }
  rep.problem = exp.problem;
  rep.config_hash = lab.coalition_hash(rules::Coalition::full(n));
  rep.channel_names = exp.rules.symbols().outputs;
  for (const auto& r : exp.rules.rules()) rep.rule_names.push_back(r.name);
  return rep;
}

nlohmann::json WrongRuleScan::to_json() const {
  nlohmann::json sc = nlohmann::json::array();
  for (const auto& s : scenarios) {
    sc.push_back({{"id", s.perturbation.id},
                  {"rule", s.perturbation.rule + 1},
                  {"equation", s.perturbation.equation},
                  {"flagged", s.flagged},
                  {"minimum", s.minimum},
                  {"delta_ri", s.delta_ri},
                  {"report", s.report.to_json()}});
  }
  return {{"threshold", threshold}, {"reference", reference.to_json()}, {"scenarios", sc}};
}

WrongRuleScan wrong_rule_scan(lab::CoalitionLab& lab, const std::vector<Perturbation>& perturbations,
                              const AnalysisOptions& options, double threshold) {
  const auto& base_rules = lab.experiment().rules;
  // Compile every scenario first so a bad expression fails before any training.
  std::vector<rules::RuleSet> variants;
  for (const auto& p : perturbations) {
    if (p.rule >= base_rules.size())
      throw ConfigError("perturbation '" + p.id + "' names rule " + std::to_string(p.rule + 1) + " of " +
                        std::to_string(base_rules.size()));
    try {
      variants.push_back(base_rules.with_equation(p.rule, p.equation));
    } catch (const ConfigError& e) {
      throw ConfigError("perturbation '" + p.id + "': " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("perturbation '" + p.id + "': " + e.what());
    }
  }
  WrongRuleScan scan;
  scan.threshold = threshold;
  scan.reference = analyze(lab, options);
  for (std::size_t k = 0; k < perturbations.size(); ++k) {
    auto scenario_lab = lab.with_rules(variants[k]);
    ScenarioReport s;
    s.perturbation = perturbations[k];
    s.report = analyze(scenario_lab, options);
    const auto& ri = s.report.ri;
    for (std::size_t i = 0; i < ri.size(); ++i) s.delta_ri.push_back(ri[i] - scan.reference.ri[i]);
    const auto i = s.perturbation.rule;
    s.flagged = ri[i] < -threshold;
    s.minimum = std::min_element(ri.begin(), ri.end()) - ri.begin() == static_cast<std::ptrdiff_t>(i);
    scan.scenarios.push_back(std::move(s));
  }
  return scan;
}

}  // namespace rulewise::importance
