#include "rulewise/tuner/tuner.hpp"

#include "rulewise/common/error.hpp"
#include "rulewise/common/text_format.hpp"
#include "rulewise/rules/composite_loss.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>
#include <sstream>

namespace rulewise::tuner {

std::string TuneState::trajectory_csv() const {
  std::ostringstream out;
  out << "iteration";
  const auto n = weights.size();
  for (std::size_t i = 0; i < n; ++i) out << ",lambda_" << i + 1;
  out << ",validation_loss,accepted,step\n";
  for (const auto& h : history) {
    out << h.iteration;
    for (double w : h.weights) out << ',' << format_double(w);
    out << ',' << (std::isfinite(h.validation_loss) ? format_double(h.validation_loss) : std::string("inf")) << ','
        << (h.accepted ? 1 : 0) << ',' << format_double(h.step) << '\n';
  }
  return out.str();
}

std::vector<double> propose_weights(const std::vector<double>& weights, const std::vector<double>& ri, double step,
                                    double threshold) {
  if (ri.size() != weights.size()) throw std::invalid_argument("importance and weight vectors differ in length");
  std::vector<double> out = weights;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (ri[i] > threshold)
      out[i] *= 1.0 + step;
    else if (ri[i] < -threshold)
      out[i] = std::max(0.0, out[i] * (1.0 - step));
  }
  return out;
}

TuneState tune_weights(TuneOracle& oracle, std::vector<double> initial, const TuneOptions& options) {
  if (options.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (!(options.initial_step > 0.0)) throw ConfigError("the initial step must be positive");
  for (double w : initial)
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights must be finite and non-negative");

  TuneState st;
  st.weights = std::move(initial);
  st.step = options.initial_step;
  st.best_validation_loss = oracle.validation_loss(st.weights);
  st.history.push_back({0, st.weights, st.best_validation_loss, {}, true, st.step});

  while (st.iteration < options.max_iters && st.step >= options.min_step) {
    ++st.iteration;
    const auto ri = oracle.importance(st.weights);
    const auto proposal = propose_weights(st.weights, ri, st.step, options.threshold);
    TuneStep rec{st.iteration, proposal, st.best_validation_loss, ri, false, st.step};
    if (proposal == st.weights) {
      // Nothing to try: record the probe and stop.
      st.history.push_back(std::move(rec));
      break;
    }
    double loss = std::numeric_limits<double>::infinity();
    try {
      loss = oracle.validation_loss(proposal);
    } catch (const TrainingError& e) {
      spdlog::warn("tuning iteration {} diverged: {}", st.iteration, e.what());
    }
    rec.validation_loss = loss;
    if (loss < st.best_validation_loss) {
      rec.accepted = true;
      st.weights = proposal;
      st.best_validation_loss = loss;
    } else {
      st.step /= 2.0;
    }
    spdlog::info("tuning iteration {}: validation loss {:.4g} ({})", st.iteration, loss,
                 rec.accepted ? "accepted" : "reverted");
    st.history.push_back(std::move(rec));
  }
  return st;
}

LabTuneOracle::LabTuneOracle(lab::CoalitionLab& lab, importance::AnalysisOptions analysis)
    : lab_(lab), analysis_(analysis) {}

std::vector<double> LabTuneOracle::importance(const std::vector<double>& weights) {
  auto weighted = lab_.with_rules(lab_.experiment().rules.with_weights(weights));
  return importance::analyze(weighted, analysis_).ri;
}

lab::CoalitionResult LabTuneOracle::full_result(const std::vector<double>& weights) {
  auto weighted = lab_.with_rules(lab_.experiment().rules.with_weights(weights));
  const auto results = weighted.run({rules::Coalition::full(weighted.rule_count())});
  return results.front();
}

double LabTuneOracle::validation_loss(const std::vector<double>& weights) {
  const auto r = full_result(weights);
  if (std::isnan(r.validation_mse)) throw ConfigError("weight tuning needs validation data");
  if (r.failed) throw TrainingError("full-coalition training diverged");
  return r.validation_mse;
}

lab::Experiment single_seed(const lab::Experiment& exp, std::uint64_t seed) {
  auto e = exp;
  e.protocol.seeds = {seed};
  return e;
}

std::string to_string(WeightingMethod m) {
  switch (m) {
    case WeightingMethod::Default: return "default";
    case WeightingMethod::Empirical: return "empirical";
    case WeightingMethod::GradientFlow: return "gradient_flow";
    case WeightingMethod::Ours: return "ours";
  }
  return "default";
}

const WeightingRow& WeightingComparison::row(WeightingMethod m) const {
  for (const auto& r : rows)
    if (r.method == m) return r;
  throw std::out_of_range("no row for weighting method " + to_string(m));
}

nlohmann::json WeightingComparison::to_json() const {
  auto number = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"method", to_string(r.method)}, {"applicable", r.applicable}};
    if (r.applicable) {
      j["weights"] = r.weights;
      j["test_mse"] = number(r.test_mse);
      j["validation_mse"] = number(r.validation_mse);
    }
    rs.push_back(j);
  }
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : tuning.history)
    hist.push_back({{"iteration", h.iteration},
                    {"weights", h.weights},
                    {"validation_loss", number(h.validation_loss)},
                    {"ri", h.ri},
                    {"accepted", h.accepted},
                    {"step", h.step}});
  return {{"seed", seed}, {"rows", rs}, {"tuning", hist}};
}

std::vector<double> empirical_weights(lab::CoalitionLab& lab, std::uint64_t seed) {
  const auto& exp = lab.experiment();
  const auto n = exp.rules.size();
  std::vector<double> w(n, 1.0);
  const auto base = lab.baseline(seed);
  const double data_loss = rules::data_mse(base->network, exp.train);
  if (!(data_loss > 0.0)) return w;
  const auto colloc = rules::collocation_table(exp.rules, exp.collocation);
  for (std::size_t i = 0; i < n; ++i) {
    const double li = rules::rule_loss(exp.rules, i, base->network, colloc[i]);
    if (li > 0.0 && std::isfinite(li)) w[i] = std::pow(10.0, std::round(std::log10(data_loss / li)));
  }
  return w;
}

WeightingComparison compare_weighting_methods(lab::CoalitionLab& lab, const TuneOptions& options,
                                              const importance::AnalysisOptions& analysis) {
  const auto& exp = lab.experiment();
  const auto n = exp.rules.size();
  WeightingComparison cmp;
  cmp.seed = exp.protocol.seeds.front();
  LabTuneOracle oracle(lab, analysis);
  auto evaluate = [&](WeightingMethod m, const std::vector<double>& w) {
    const auto r = oracle.full_result(w);
    cmp.rows.push_back({m, true, w, r.test_mse, r.validation_mse});
  };
  evaluate(WeightingMethod::Default, std::vector<double>(n, 1.0));
  evaluate(WeightingMethod::Empirical, empirical_weights(lab, cmp.seed));
  cmp.rows.push_back({WeightingMethod::GradientFlow, false, {}, std::nan(""), std::nan("")});
  cmp.tuning = tune_weights(oracle, std::vector<double>(n, 1.0), options);
  evaluate(WeightingMethod::Ours, cmp.tuning.weights);
  return cmp;
}

}  // namespace rulewise::tuner
