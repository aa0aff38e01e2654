#include "rulewise/orchestrator/config.hpp"

#include "rulewise/common/atomic_file.hpp"
#include "rulewise/common/error.hpp"
#include "rulewise/common/hashing.hpp"
#include "rulewise/common/text_format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

namespace rulewise::orchestrator {

namespace {

using nlohmann::json;

/// Reads one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }
  ~Section() = default;

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  Section section(const std::string& key) { return Section(raw(key), path_ + "." + key); }

  template <class T>
  std::optional<T> get(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return convert<T>(raw(key), path_ + "." + key);
  }

  template <class T>
  void read(const std::string& key, T& into) {
    if (auto v = get<T>(key)) into = *v;
  }

  /// Throws on keys nobody asked for.
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + k + "' in " + where());
  }

  template <class T>
  static T convert(const json& v, const std::string& path) {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ConfigError(path + " must be a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(path + " must be a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path + " must be true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(path + " must be a string");
      } else {
        if (!v.is_array()) throw ConfigError(path + " must be an array");
        T out;
        for (std::size_t k = 0; k < v.size(); ++k)
          out.push_back(convert<typename T::value_type>(v[k], path + "[" + std::to_string(k) + "]"));
        return out;
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }

 private:
  [[nodiscard]] std::string where() const { return path_.empty() ? "the config" : "'" + path_ + "'"; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::size_t one_based(std::size_t k, const std::string& what) {
  if (k == 0) throw ConfigError(what + " uses 1-based rule numbers");
  return k - 1;
}

void read_importance(Section s, importance::AnalysisOptions& o) {
  if (auto m = s.get<std::string>("method")) o.method = importance::parse_method(*m);
  s.read("samples", o.samples);
  s.read("sample_seed", o.sample_seed);
  s.finish();
  if (o.method == importance::Method::MonteCarlo && o.samples == 0)
    throw ConfigError("Monte Carlo needs at least one sample");
}

json importance_json(const importance::AnalysisOptions& o) {
  return {{"method", importance::to_string(o.method)}, {"samples", o.samples}, {"sample_seed", o.sample_seed}};
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  const auto problem = root.get<std::string>("problem");
  if (!problem) throw ConfigError("the config must name a problem");
  try {
    c.problem = zoo::parse_problem_id(*problem);
    if (auto m = root.get<std::string>("multivar_mode")) {
      if (*m == "outer")
        c.multivar_mode = zoo::MultivarMode::Outer;
      else if (*m == "inner")
        c.multivar_mode = zoo::MultivarMode::Inner;
      else
        throw ConfigError("multivar_mode must be 'outer' or 'inner'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (root.has("data")) {
    auto s = root.section("data");
    if (auto p = s.get<std::string>("path")) c.data_path = *p;
    s.read("expect_full_grid", c.expect_full_grid);
    s.finish();
  }
  if (root.has("split")) {
    auto s = root.section("split");
    if (auto m = s.get<std::string>("mode")) {
      try {
        c.split.mode = zoo::parse_split_mode(*m);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    s.read("train_volume", c.split.train_volume);
    s.read("test_volume", c.split.test_volume);
    s.read("noise", c.split.noise);
    s.read("seed", c.split.seed);
    s.finish();
    if (!(c.split.noise >= 0.0) || !std::isfinite(c.split.noise)) throw ConfigError("split.noise must be >= 0");
  }
  if (root.has("network")) {
    auto s = root.section("network");
    c.hidden_layers = s.get<std::size_t>("hidden_layers");
    c.hidden_width = s.get<std::size_t>("hidden_width");
    if (auto a = s.get<std::string>("activation")) {
      try {
        c.activation = ad::parse_activation(*a);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    s.finish();
  }
  if (root.has("protocol")) {
    auto s = root.section("protocol");
    auto& p = c.protocol;
    s.read("pretrain_epochs_max", p.pretrain_epochs_max);
    s.read("finetune_epochs_max", p.finetune_epochs_max);
    s.read("plateau_patience", p.plateau_patience);
    s.read("plateau_tol", p.plateau_tol);
    s.read("learning_rate", p.learning_rate);
    s.read("seeds", p.seeds);
    s.read("exclude_failed", p.exclude_failed);
    s.finish();
  }
  c.protocol.validate();
  if (root.has("collocation")) {
    auto s = root.section("collocation");
    c.collocation_interior = s.get<std::vector<std::size_t>>("interior");
    c.collocation_face = s.get<std::size_t>("face");
    s.finish();
  }
  if (root.has("rules")) {
    auto s = root.section("rules");
    s.read("weights", c.weights);
    for (auto k : s.get<std::vector<std::size_t>>("drop").value_or(std::vector<std::size_t>{}))
      c.drop.push_back(one_based(k, "rules.drop"));
    if (s.has("equations")) {
      const auto& arr = s.raw("equations");
      if (!arr.is_array()) throw ConfigError("rules.equations must be an array");
      for (std::size_t k = 0; k < arr.size(); ++k) {
        Section e(arr[k], "rules.equations[" + std::to_string(k) + "]");
        const auto rule = e.get<std::size_t>("rule");
        const auto eq = e.get<std::string>("equation");
        e.finish();
        if (!rule || !eq) throw ConfigError("each rules.equations entry needs 'rule' and 'equation'");
        c.equations.push_back({one_based(*rule, "rules.equations"), *eq});
      }
    }
    s.finish();
  }
  if (root.has("importance")) read_importance(root.section("importance"), c.importance);
  if (root.has("tuning")) {
    auto s = root.section("tuning");
    s.read("max_iters", c.tuning.max_iters);
    s.read("initial_step", c.tuning.initial_step);
    s.read("min_step", c.tuning.min_step);
    s.read("threshold", c.tuning.threshold);
    if (s.has("importance")) read_importance(s.section("importance"), c.tuning_importance);
    s.finish();
    if (c.tuning.max_iters == 0) throw ConfigError("tuning.max_iters must be at least 1");
    if (!(c.tuning.initial_step > 0.0)) throw ConfigError("tuning.initial_step must be positive");
  }
  if (root.has("wrong_rules")) {
    auto s = root.section("wrong_rules");
    s.read("threshold", c.flag_threshold);
    if (s.has("scenarios")) {
      const auto& arr = s.raw("scenarios");
      if (!arr.is_array()) throw ConfigError("wrong_rules.scenarios must be an array");
      for (std::size_t k = 0; k < arr.size(); ++k) {
        Section e(arr[k], "wrong_rules.scenarios[" + std::to_string(k) + "]");
        importance::Perturbation p;
        p.id = e.get<std::string>("id").value_or("scenario-" + std::to_string(k + 1));
        const auto rule = e.get<std::size_t>("rule");
        const auto eq = e.get<std::string>("equation");
        e.finish();
        if (!rule || !eq) throw ConfigError("each wrong-rule scenario needs 'rule' and 'equation'");
        p.rule = one_based(*rule, "wrong_rules.scenarios");
        p.equation = *eq;
        c.scenarios.push_back(std::move(p));
      }
    }
    s.finish();
  }
  if (root.has("studies")) {
    auto s = root.section("studies");
    s.read("volumes", c.volumes);
    s.read("noise_levels", c.noise_levels);
    s.read("collocation_sizes", c.collocation_sizes);
    s.finish();
  }
  if (root.has("output")) {
    auto s = root.section("output");
    if (auto d = s.get<std::string>("dir")) c.output_dir = *d;
    if (auto d = s.get<std::string>("cache_dir")) c.cache_dir = *d;
    s.read("csv_only", c.csv_only);
    s.finish();
  }
  root.read("workers", c.workers);
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  try {
    return parse_config(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json rules_j = {{"weights", weights}};
  json drops = json::array();
  for (auto k : drop) drops.push_back(k + 1);
  rules_j["drop"] = drops;
  json eqs = json::array();
  for (const auto& e : equations) eqs.push_back({{"rule", e.rule + 1}, {"equation", e.equation}});
  rules_j["equations"] = eqs;
  json scen = json::array();
  for (const auto& s : scenarios) scen.push_back({{"id", s.id}, {"rule", s.rule + 1}, {"equation", s.equation}});

  json j = {
      {"problem", zoo::to_string(problem)},
      {"multivar_mode", multivar_mode == zoo::MultivarMode::Outer ? "outer" : "inner"},
      {"data", {{"expect_full_grid", expect_full_grid}}},
      {"split",
       {{"mode", zoo::to_string(split.mode)},
        {"train_volume", split.train_volume},
        {"test_volume", split.test_volume},
        {"noise", split.noise},
        {"seed", split.seed}}},
      {"protocol",
       {{"pretrain_epochs_max", protocol.pretrain_epochs_max},
        {"finetune_epochs_max", protocol.finetune_epochs_max},
        {"plateau_patience", protocol.plateau_patience},
        {"plateau_tol", protocol.plateau_tol},
        {"learning_rate", protocol.learning_rate},
        {"seeds", protocol.seeds},
        {"exclude_failed", protocol.exclude_failed}}},
      {"rules", rules_j},
      {"importance", importance_json(importance)},
      {"tuning",
       {{"max_iters", tuning.max_iters},
        {"initial_step", tuning.initial_step},
        {"min_step", tuning.min_step},
        {"threshold", tuning.threshold},
        {"importance", importance_json(tuning_importance)}}},
      {"wrong_rules", {{"threshold", flag_threshold}, {"scenarios", scen}}},
      {"studies", {{"volumes", volumes}, {"noise_levels", noise_levels}, {"collocation_sizes", collocation_sizes}}},
      {"output", {{"dir", output_dir.string()}, {"csv_only", csv_only}}},
      {"workers", workers}};
  if (data_path) j["data"]["path"] = data_path->string();
  json net = json::object();
  if (hidden_layers) net["hidden_layers"] = *hidden_layers;
  if (hidden_width) net["hidden_width"] = *hidden_width;
  if (activation) net["activation"] = ad::to_string(*activation);
  j["network"] = net;
  json colloc = json::object();
  if (collocation_interior) colloc["interior"] = *collocation_interior;
  if (collocation_face) colloc["face"] = *collocation_face;
  j["collocation"] = colloc;
  if (cache_dir) j["output"]["cache_dir"] = cache_dir->string();
  return j;
}

std::string ExperimentConfig::config_hash() const {
  auto j = to_json();
  j.erase("output");
  j.erase("workers");
  return sha256_hex(j.dump());
}

void apply_environment(ExperimentConfig& config) {
  if (!config.cache_dir)
    if (const char* env = std::getenv("RULEWISE_CACHE_DIR"); env && *env) config.cache_dir = env;
  if (config.workers == 0) config.workers = lab::default_workers();
}

Dataset load_dataset(const ExperimentConfig& config, const zoo::ProblemDef& problem) {
  if (config.data_path) return zoo::ingest_dataset(*config.data_path, problem, {config.expect_full_grid});
  if (!problem.self_generated)
    throw DataError(problem.name() + " is ingest-only: set data.path to a CSV with columns " +
                    [&] {
                      std::string cols;
                      for (const auto& n : problem.input_names) cols += n + ",";
                      for (const auto& n : problem.output_names) cols += n + ",";
                      cols.pop_back();
                      return cols;
                    }());
  return zoo::reference_data(problem);
}

Prepared prepare(const ExperimentConfig& config) {
  auto problem = zoo::make_problem(config.problem, config.multivar_mode);
  const auto data = load_dataset(config, problem);
  auto split = zoo::make_split(data, config.split, problem);

  auto rules = problem.rules;
  try {
    if (!config.weights.empty()) {
      if (config.weights.size() != rules.size())
        throw ConfigError("rules.weights has " + std::to_string(config.weights.size()) + " entries for " +
                          std::to_string(rules.size()) + " rules");
      rules = rules.with_weights(config.weights);
    }
    for (const auto& e : config.equations) {
      if (e.rule >= rules.size()) throw ConfigError("rules.equations names rule " + std::to_string(e.rule + 1));
      rules = rules.with_equation(e.rule, e.equation);
    }
    auto drops = config.drop;
    std::sort(drops.rbegin(), drops.rend());
    if (std::adjacent_find(drops.begin(), drops.end()) != drops.end()) throw ConfigError("rules.drop repeats a rule");
    for (auto k : drops) {
      if (k >= rules.size()) throw ConfigError("rules.drop names rule " + std::to_string(k + 1));
      rules = rules.without(k);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  auto net = problem.default_net;
  if (config.hidden_layers) net.hidden_layers = *config.hidden_layers;
  if (config.hidden_width) net.hidden_width = *config.hidden_width;
  if (config.activation) net.activation = *config.activation;
  try {
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  auto colloc = problem.default_collocation;
  if (config.collocation_interior) colloc.interior = *config.collocation_interior;
  if (config.collocation_face) colloc.face = *config.collocation_face;

  lab::Experiment e{problem.name(), std::move(rules), net, colloc, std::move(split.train),
                    std::move(split.validation), std::move(split.test), config.protocol};
  return {std::move(problem), std::move(e), std::move(split.manifest)};
}

lab::CoalitionLab make_lab(const ExperimentConfig& config, const Prepared& prepared) {
  std::shared_ptr<const lab::ResultCache> cache;
  if (config.cache_dir) cache = std::make_shared<const lab::ResultCache>(*config.cache_dir);
  return lab::CoalitionLab(prepared.experiment, cache, config.workers == 0 ? lab::default_workers() : config.workers);
}

}  // namespace rulewise::orchestrator
