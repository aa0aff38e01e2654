#include "rulewise/importance/report.hpp"

#include "rulewise/common/error.hpp"
#include "rulewise/common/text_format.hpp"
#include "rulewise/lab/cache.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace rulewise::importance {

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_from(const nlohmann::json& j, double missing) { return j.is_null() ? missing : j.get<double>(); }

std::string csv_value(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::Exact: return "exact";
    case Method::MonteCarlo: return "monte_carlo";
    case Method::ShapleyWeighted: return "shapley_weighted";
  }
  return "exact";
}

Method parse_method(const std::string& text) {
  if (text == "exact") return Method::Exact;
  if (text == "monte_carlo") return Method::MonteCarlo;
  if (text == "shapley_weighted") return Method::ShapleyWeighted;
  throw ConfigError("unknown importance method '" + text + "'");
}

ResultTables tabulate(const std::vector<lab::CoalitionResult>& results, std::size_t rules, std::size_t channels,
                      bool exclude_failed) {
  std::map<std::uint64_t, std::vector<const lab::CoalitionResult*>> by_seed;
  for (const auto& r : results) {
    if (r.coalition.n != rules) throw std::invalid_argument("result coalition size does not match the rule count");
    by_seed[r.seed].push_back(&r);
  }
  if (by_seed.empty()) throw std::invalid_argument("no results to tabulate");
  ResultTables t;
  std::vector<std::vector<MseTable>> channel_tables(channels);
  for (const auto& [seed, rs] : by_seed) {
    t.seeds.push_back(seed);
    MseTable overall(rules);
    std::vector<MseTable> per_channel(channels, MseTable(rules));
    for (const auto* r : rs) {
      if (exclude_failed && r->failed) continue;
      overall.set(r->coalition.mask, r->test_mse);
      if (r->channel_mse.size() != channels) throw std::invalid_argument("result has the wrong number of channels");
      for (std::size_t c = 0; c < channels; ++c) per_channel[c].set(r->coalition.mask, r->channel_mse[c]);
    }
    t.per_seed.push_back(std::move(overall));
    for (std::size_t c = 0; c < channels; ++c) channel_tables[c].push_back(std::move(per_channel[c]));
  }
  t.aggregate = MseTable::geometric_mean(t.per_seed);
  for (auto& ct : channel_tables) t.channel_aggregate.push_back(MseTable::geometric_mean(ct));
  return t;
}

ImportanceReport exact_report(const ResultTables& tables, Method method) {
  if (method == Method::MonteCarlo) throw std::invalid_argument("exact_report does not handle Monte Carlo");
  const auto& table = tables.aggregate;
  ImportanceReport rep;
  rep.method = method;
  rep.seeds = tables.seeds;
  for (std::size_t i = 0; i < table.rules(); ++i) {
    rep.ri.push_back(rule_importance(table, i));
    rep.fi.push_back(full_importance(table, i));
    rep.shapley.push_back(shapley_weighted(table, i));
    rep.curves.push_back(relying_curve(table, i));
  }
  rep.per_variable = per_variable_importance(tables.channel_aggregate);
  return rep;
}

const std::vector<double>& ImportanceReport::headline() const {
  return method == Method::ShapleyWeighted ? shapley : ri;
}

nlohmann::json ImportanceReport::to_json() const {
  nlohmann::json rules = nlohmann::json::array();
  for (std::size_t i = 0; i < ri.size(); ++i) {
    nlohmann::json r = {{"index", i + 1},
                        {"name", i < rule_names.size() ? rule_names[i] : std::string()},
                        {"ri", number(ri[i])},
                        {"fi", number(fi.at(i))}};
    if (i < ri_stderr.size()) r["ri_stderr"] = number(ri_stderr[i]);
    if (i < shapley.size()) r["shapley"] = number(shapley[i]);
    if (i < curves.size()) {
      nlohmann::json curve = nlohmann::json::array();
      for (const auto& p : curves[i]) {
        nlohmann::json masks = nlohmann::json::array();
        nlohmann::json values = nlohmann::json::array();
        for (const auto& c : p.coalitions) masks.push_back(c.mask);
        for (double v : p.values) values.push_back(number(v));
        curve.push_back({{"r", p.relying}, {"mean", number(p.mean)}, {"masks", masks}, {"values", values}});
      }
      r["curve"] = curve;
    }
    if (i < per_variable.size()) {
      nlohmann::json pv = nlohmann::json::object();
      for (std::size_t c = 0; c < per_variable[i].size(); ++c)
        pv[c < channel_names.size() ? channel_names[c] : std::to_string(c)] = number(per_variable[i][c]);
      r["per_variable"] = pv;
    }
    rules.push_back(r);
  }
  nlohmann::json res = nlohmann::json::array();
  for (const auto& r : results) res.push_back(lab::to_json(r));
  nlohmann::json j = {{"problem", problem},     {"method", to_string(method)}, {"seeds", seeds},
                      {"config_hash", config_hash}, {"rule_count", ri.size()},    {"channels", channel_names},
                      {"rules", rules},         {"results", res}};
  if (method == Method::MonteCarlo) {
    j["sample_count"] = sample_count;
    j["sample_seed"] = sample_seed;
  }
  return j;
}

std::string ImportanceReport::to_csv() const {
  std::ostringstream out;
  out << "rule,name,metric,value\n";
  auto row = [&](std::size_t i, const std::string& metric, double v) {
    out << i + 1 << ',' << (i < rule_names.size() ? rule_names[i] : std::string()) << ',' << metric << ','
        << csv_value(v) << '\n';
  };
  for (std::size_t i = 0; i < ri.size(); ++i) {
    row(i, "ri", ri[i]);
    if (i < ri_stderr.size()) row(i, "ri_stderr", ri_stderr[i]);
    row(i, "fi", fi.at(i));
    if (i < shapley.size()) row(i, "shapley", shapley[i]);
    if (i < curves.size())
      for (const auto& p : curves[i]) row(i, "ri_r" + std::to_string(p.relying), p.mean);
    if (i < per_variable.size())
      for (std::size_t c = 0; c < per_variable[i].size(); ++c)
        row(i, "ri_" + (c < channel_names.size() ? channel_names[c] : std::to_string(c)), per_variable[i][c]);
  }
  return out.str();
}

ImportanceReport report_from_json(const nlohmann::json& j) {
  try {
    ImportanceReport rep;
    rep.problem = j.at("problem").get<std::string>();
    rep.method = parse_method(j.at("method").get<std::string>());
    rep.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    rep.config_hash = j.at("config_hash").get<std::string>();
    rep.channel_names = j.at("channels").get<std::vector<std::string>>();
    if (rep.method == Method::MonteCarlo) {
      rep.sample_count = j.at("sample_count").get<std::size_t>();
      rep.sample_seed = j.at("sample_seed").get<std::uint64_t>();
    }
    const auto n = j.at("rule_count").get<std::size_t>();
    const double nan = std::nan("");
    for (const auto& r : j.at("rules")) {
      rep.rule_names.push_back(r.at("name").get<std::string>());
      rep.ri.push_back(number_from(r.at("ri"), nan));
      rep.fi.push_back(number_from(r.at("fi"), nan));
      if (r.contains("ri_stderr")) rep.ri_stderr.push_back(number_from(r["ri_stderr"], INFINITY));
      if (r.contains("shapley")) rep.shapley.push_back(number_from(r["shapley"], nan));
      if (r.contains("curve")) {
        std::vector<RelyingPoint> curve;
        for (const auto& p : r["curve"]) {
          RelyingPoint pt;
          pt.relying = p.at("r").get<std::size_t>();
          pt.mean = number_from(p.at("mean"), nan);
          for (const auto& m : p.at("masks")) pt.coalitions.emplace_back(m.get<std::uint32_t>(), n);
          for (const auto& v : p.at("values")) pt.values.push_back(number_from(v, nan));
          curve.push_back(std::move(pt));
        }
        rep.curves.push_back(std::move(curve));
      }
      if (r.contains("per_variable")) {
        std::vector<double> row;
        for (const auto& c : rep.channel_names) row.push_back(number_from(r["per_variable"].at(c), nan));
        rep.per_variable.push_back(std::move(row));
      }
    }
    if (rep.ri.size() != n) throw DataError("report rule count does not match its rule list");
    for (const auto& r : j.at("results")) rep.results.push_back(lab::result_from_json(r));
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed importance report: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed importance report: ") + e.what());
  }
}

}  // namespace rulewise::importance
