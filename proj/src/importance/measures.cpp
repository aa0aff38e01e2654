#include "rulewise/importance/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace rulewise::importance {

namespace {

void check_rule(const MseTable& t, std::size_t i) {
  if (i >= t.rules()) throw std::out_of_range("rule index " + std::to_string(i + 1) + " out of range");
}

void check_complete(const MseTable& t) {
  if (!t.complete()) throw std::invalid_argument("MSE table is incomplete");
}

}  // namespace

double floor_mse(double mse) {
  if (!std::isfinite(mse) || mse < 0.0) throw std::invalid_argument("MSE must be finite and non-negative");
  return std::max(mse, kMseFloor);
}

MseTable::MseTable(std::size_t rules) : n_(rules) {
  if (rules > rules::kMaxRules) throw std::invalid_argument("too many rules for an MSE table");
  values_.resize(std::size_t{1} << rules);
}

MseTable MseTable::from_values(std::size_t rules, const std::vector<double>& values) {
  MseTable t(rules);
  if (values.size() != t.masks()) throw std::invalid_argument("expected 2^N table values");
  for (std::size_t m = 0; m < values.size(); ++m) t.set(static_cast<std::uint32_t>(m), values[m]);
  return t;
}

MseTable MseTable::geometric_mean(const std::vector<MseTable>& tables) {
  if (tables.empty()) throw std::invalid_argument("no tables to aggregate");
  MseTable out(tables.front().rules());
  for (std::size_t m = 0; m < out.masks(); ++m) {
    double log_sum = 0.0;
    std::size_t count = 0;
    for (const auto& t : tables) {
      if (t.rules() != out.rules()) throw std::invalid_argument("tables disagree on the rule count");
      if (t.has(static_cast<std::uint32_t>(m))) {
        log_sum += std::log10(t.at(static_cast<std::uint32_t>(m)));
        ++count;
      }
    }
    if (count > 0) out.values_[m] = std::pow(10.0, log_sum / static_cast<double>(count));
  }
  return out;
}

void MseTable::set(std::uint32_t mask, double mse) { values_.at(mask) = floor_mse(mse); }

double MseTable::at(std::uint32_t mask) const {
  const auto& v = values_.at(mask);
  if (!v) throw std::out_of_range("MSE table has no entry for mask " + std::to_string(mask));
  return *v;
}

bool MseTable::complete() const {
  return std::all_of(values_.begin(), values_.end(), [](const auto& v) { return v.has_value(); });
}

MseTable MseTable::scaled(double c) const {
  if (!(c > 0.0)) throw std::invalid_argument("scale must be positive");
  MseTable out(n_);
  for (std::size_t m = 0; m < values_.size(); ++m)
    if (values_[m]) out.values_[m] = floor_mse(*values_[m] * c);
  return out;
}

double marginal(const MseTable& table, std::size_t i, rules::Coalition s) {
  check_rule(table, i);
  if (!s.contains(i)) throw std::invalid_argument("coalition does not contain the rule");
  return std::log10(table.at(s.without(i).mask)) - std::log10(table.at(s.mask));
}

double rule_importance(const MseTable& table, std::size_t i) {
  check_rule(table, i);
  check_complete(table);
  double sum = 0.0;
  const auto group = rules::coalitions_containing(i, table.rules());
  for (const auto& s : group) sum += marginal(table, i, s);
  return sum / static_cast<double>(group.size());
}

double full_importance(const MseTable& table, std::size_t i) {
  check_rule(table, i);
  return marginal(table, i, rules::Coalition::full(table.rules()));
}

std::vector<RelyingPoint> relying_curve(const MseTable& table, std::size_t i) {
  check_rule(table, i);
  check_complete(table);
  std::vector<RelyingPoint> curve;
  for (std::size_t r = 0; r < table.rules(); ++r) {
    RelyingPoint p;
    p.relying = r;
    p.coalitions = rules::relying_groups(i, table.rules(), r);
    for (const auto& s : p.coalitions) p.values.push_back(marginal(table, i, s));
    p.mean = std::accumulate(p.values.begin(), p.values.end(), 0.0) / static_cast<double>(p.values.size());
    curve.push_back(std::move(p));
  }
  return curve;
}

double shapley_weighted(const MseTable& table, std::size_t i) {
  check_rule(table, i);
  check_complete(table);
  const auto n = table.rules();
  // weight(k) = (k-1)!(n-k)!/n! for |s| = k, built without large factorials.
  std::vector<double> weight(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    double w = 1.0 / static_cast<double>(n);
    // divide by C(n-1, k-1)
    for (std::size_t j = 1; j <= k - 1; ++j) w *= static_cast<double>(j) / static_cast<double>(n - k + j);
    weight[k] = w;
  }
  double sum = 0.0;
  for (const auto& s : rules::coalitions_containing(i, n)) sum += weight[s.size()] * marginal(table, i, s);
  return sum;
}

std::vector<rules::Coalition> sample_coalitions(std::size_t n, std::size_t i, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("Monte Carlo needs at least one sample");
  auto pool = rules::coalitions_containing(i, n);
  std::mt19937_64 gen(seed);
  std::vector<rules::Coalition> out;
  if (samples <= pool.size()) {
    // Partial Fisher-Yates: the first `samples` entries are a uniform draw without replacement.
    for (std::size_t k = 0; k < samples; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(gen)]);
      out.push_back(pool[k]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t k = 0; k < samples; ++k) out.push_back(pool[pick(gen)]);
  }
  return out;
}

MonteCarloEstimate monte_carlo_ri(const std::function<double(rules::Coalition)>& mse, std::size_t n, std::size_t i,
                                  std::size_t samples, std::uint64_t seed) {
  const auto draws = sample_coalitions(n, i, samples, seed);
  const auto population = static_cast<double>(std::size_t{1} << (n - 1));
  std::vector<double> deltas;
  deltas.reserve(draws.size());
  for (const auto& s : draws)
    deltas.push_back(std::log10(floor_mse(mse(s.without(i)))) - std::log10(floor_mse(mse(s))));
  MonteCarloEstimate est;
  est.samples = draws.size();
  const auto k = static_cast<double>(draws.size());
  est.estimate = std::accumulate(deltas.begin(), deltas.end(), 0.0) / k;
  const bool without_replacement = k <= population;
  est.exhaustive = without_replacement && k == population;
  if (est.exhaustive) {
    est.standard_error = 0.0;
    return est;
  }
  double ss = 0.0;
  for (double d : deltas) ss += (d - est.estimate) * (d - est.estimate);
  if (draws.size() < 2) {
    est.standard_error = ss == 0.0 && population == 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return est;
  }
  const double var = ss / (k - 1.0);
  const double fpc = without_replacement ? (1.0 - k / population) : 1.0;
  est.standard_error = std::sqrt(fpc * var / k);
  return est;
}

std::vector<std::vector<double>> per_variable_importance(const std::vector<MseTable>& channel_tables) {
  if (channel_tables.empty()) return {};
  const auto n = channel_tables.front().rules();
  std::vector<std::vector<double>> out(n, std::vector<double>(channel_tables.size()));
  for (std::size_t c = 0; c < channel_tables.size(); ++c) {
    if (channel_tables[c].rules() != n) throw std::invalid_argument("channel tables disagree on the rule count");
    for (std::size_t i = 0; i < n; ++i) out[i][c] = rule_importance(channel_tables[c], i);
  }
  return out;
}

}  // namespace rulewise::importance
