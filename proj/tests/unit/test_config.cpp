#include <doctest.h>

#include "rulewise/common/error.hpp"
#include "rulewise/orchestrator/config.hpp"

using namespace rulewise;
using namespace rulewise::orchestrator;
using nlohmann::json;

namespace {

// The example from the README, kept in sync by this test.
const char* kFull = R"({
  "problem": "multivar",
  "multivar_mode": "outer",
  "data": {"path": "ref.csv", "expect_full_grid": true},
  "split": {"mode": "in", "train_volume": 100, "test_volume": 2000, "noise": 0.0, "seed": 0},
  "network": {"hidden_layers": 2, "hidden_width": 50, "activation": "relu"},
  "protocol": {"pretrain_epochs_max": 8000, "finetune_epochs_max": 4000, "plateau_patience": 500,
               "plateau_tol": 1e-3, "learning_rate": 1e-3, "seeds": [0, 1, 2], "exclude_failed": false},
  "collocation": {"interior": [32, 32], "face": 64},
  "rules": {"weights": [1, 1, 1, 1, 1], "drop": [5], "equations": [{"rule": 2, "equation": "d = 0"}]},
  "importance": {"method": "exact", "samples": 64, "sample_seed": 0},
  "tuning": {"max_iters": 10, "initial_step": 0.5, "min_step": 1e-3, "threshold": 0.1,
             "importance": {"method": "monte_carlo", "samples": 8}},
  "wrong_rules": {"threshold": 0.1, "scenarios": [{"id": "offset", "rule": 4, "equation": "f = 0.1"}]},
  "studies": {"volumes": [0, 10, 100, 1000], "noise_levels": [0, 0.1, 0.2], "collocation_sizes": [10, 50]},
  "output": {"dir": "out", "cache_dir": "cache", "csv_only": false},
  "workers": 4
})";

}  // namespace

TEST_CASE("full config parses and round-trips") {
  const auto c = parse_config(json::parse(kFull));
  CHECK(c.problem == zoo::ProblemId::MultiVar);
  CHECK(c.split.train_volume == 100);
  CHECK(c.protocol.seeds == std::vector<std::uint64_t>{0, 1, 2});
  CHECK(c.drop == std::vector<std::size_t>{4});
  REQUIRE(c.equations.size() == 1);
  CHECK(c.equations[0].rule == 1);
  REQUIRE(c.scenarios.size() == 1);
  CHECK(c.scenarios[0].rule == 3);
  CHECK(c.tuning_importance.method == importance::Method::MonteCarlo);
  CHECK(c.workers == 4);

  const auto back = parse_config(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.config_hash() == c.config_hash());
}

TEST_CASE("config hash ignores output placement only") {
  auto j = json::parse(kFull);
  const auto h = parse_config(j).config_hash();
  j["output"]["dir"] = "elsewhere";
  j["workers"] = 1;
  CHECK(parse_config(j).config_hash() == h);
  j["split"]["seed"] = 1;
  CHECK(parse_config(j).config_hash() != h);
}

TEST_CASE("strict parsing") {
  const auto bad = [](const char* text) { return parse_config(json::parse(text)); };
  CHECK_NOTHROW(bad(R"({"problem": "pde2d"})"));
  CHECK_THROWS_AS(bad(R"({})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": "heat"})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": "pde2d", "colour": 1})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": "pde2d", "protocol": {"epochs": 3}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": "pde2d", "split": {"train_volume": -1}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": "pde2d", "split": {"noise": -0.1}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": "pde2d", "rules": {"drop": [0]}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": "pde2d", "importance": {"method": "banzhaf"}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": "pde2d", "importance": {"method": "monte_carlo", "samples": 0}})"),
                  ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": "pde2d", "tuning": {"max_iters": 0}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"problem": "multivar", "multivar_mode": "sideways"})"), ConfigError);
}

TEST_CASE("rule overrides are checked against the problem") {
  auto c = parse_config(json::parse(R"({"problem": "multivar", "rules": {"drop": [9]}})"));
  CHECK_THROWS_AS(prepare(c), ConfigError);
  c = parse_config(json::parse(R"({"problem": "multivar", "rules": {"weights": [1, 2]}})"));
  CHECK_THROWS_AS(prepare(c), ConfigError);
  c = parse_config(json::parse(R"({"problem": "burgers"})"));
  CHECK_THROWS_AS(prepare(c), DataError);
}

TEST_CASE("prepare applies weights, equations and drops") {
  auto c = parse_config(json::parse(R"({"problem": "multivar", "split": {"test_volume": 50},
    "rules": {"weights": [1, 3, 1, 1, 1], "drop": [5], "equations": [{"rule": 1, "equation": "c = 0"}]}})"));
  const auto p = prepare(c);
  const auto& rules = p.experiment.rules;
  REQUIRE(rules.size() == 4);
  CHECK(rules.rule(1).weight == 3.0);
  CHECK(rules.rule(0).equation == "c = 0");
  CHECK(p.experiment.test.size() == 50);
}
