#include "rulewise/lab/lab.hpp"

#include "rulewise/common/error.hpp"
#include "rulewise/common/hashing.hpp"
#include "rulewise/common/text_format.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <set>
#include <thread>

namespace rulewise::lab {

namespace {

nlohmann::json dataset_digest(const Dataset& d) {
  return {{"inputs", matrix_digest(d.inputs)}, {"outputs", matrix_digest(d.outputs)},
          {"clean", matrix_digest(d.clean_outputs)}};
}

std::string compute_base_hash(const Experiment& e) {
  const auto& p = e.protocol;
  nlohmann::json j = {
      {"problem", e.problem},
      {"net",
       {e.net.input_dim, e.net.output_dim, e.net.hidden_layers, e.net.hidden_width, ad::to_string(e.net.activation)}},
      {"inputs", e.rules.symbols().inputs},
      {"outputs", e.rules.symbols().outputs},
      {"train", dataset_digest(e.train)},
      {"validation", dataset_digest(e.validation)},
      {"test", dataset_digest(e.test)},
      {"protocol",
       {p.pretrain_epochs_max, p.finetune_epochs_max, p.plateau_patience, format_double(p.plateau_tol),
        format_double(p.learning_rate)}},
      {"collocation", {{"interior", e.collocation.interior}, {"face", e.collocation.face}}},
      {"format", 1}};
  return sha256_hex(j.dump());
}

}  // namespace

std::size_t default_workers() {
  if (const char* env = std::getenv("RULEWISE_WORKERS")) {
    try {
      const auto n = std::stoul(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("RULEWISE_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex err_mutex;
  auto loop = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < count;) {
      try {
        job(k);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!first) first = std::current_exception();
      }
    }
  };
  const auto n = std::min(std::max<std::size_t>(workers, 1), count);
  if (n <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(loop);
    for (auto& th : pool) th.join();
  }
  if (first) std::rethrow_exception(first);
}

CoalitionLab::CoalitionLab(Experiment experiment, std::shared_ptr<const ResultCache> cache, std::size_t workers)
    : CoalitionLab(std::make_shared<const Experiment>(std::move(experiment)), std::move(cache), workers,
                   std::make_shared<Shared>(), std::string()) {}

CoalitionLab::CoalitionLab(std::shared_ptr<const Experiment> exp, std::shared_ptr<const ResultCache> cache,
                           std::size_t workers, std::shared_ptr<Shared> shared, std::string base_hash)
    : exp_(std::move(exp)),
      cache_(std::move(cache)),
      workers_(std::max<std::size_t>(workers, 1)),
      shared_(std::move(shared)),
      base_hash_(std::move(base_hash)) {
  exp_->protocol.validate();
  exp_->net.validate();
  if (exp_->net.input_dim != exp_->rules.symbols().inputs.size() ||
      exp_->net.output_dim != exp_->rules.symbols().outputs.size())
    throw ConfigError("network shape does not match the problem's inputs and outputs");
  if (exp_->test.empty()) throw DataError("the test set is empty");
  if (exp_->rules.size() > rules::kMaxRules) throw ConfigError("too many rules");
  colloc_ = std::make_shared<const std::vector<rules::CollocationSet>>(
      rules::collocation_table(exp_->rules, exp_->collocation));
  if (base_hash_.empty()) base_hash_ = compute_base_hash(*exp_);
}

std::string CoalitionLab::coalition_hash(rules::Coalition c) const {
  nlohmann::json active = nlohmann::json::array();
  for (std::size_t i = 0; i < exp_->rules.size(); ++i) {
    if (!c.contains(i)) continue;
    const auto& r = exp_->rules.rule(i);
    nlohmann::json box = nlohmann::json::array();
    for (const auto& a : r.region.box.axes) box.push_back({format_double(a.lo), format_double(a.hi)});
    active.push_back({{"position", i},
                      {"kind", rules::to_string(r.kind)},
                      {"equation", exp_->rules.canonical_equation(i)},
                      {"weight", format_double(r.weight)},
                      {"box", box},
                      {"face", r.region.face_axis ? nlohmann::json{*r.region.face_axis, format_double(r.region.face_value)}
                                                  : nlohmann::json(nullptr)}});
  }
  return sha256_hex(base_hash_ + active.dump());
}

CoalitionLab CoalitionLab::with_rules(rules::RuleSet rs) const {
  auto e = std::make_shared<Experiment>(*exp_);
  e->rules = std::move(rs);
  return CoalitionLab(std::move(e), cache_, workers_, shared_, base_hash_);
}

LabStats CoalitionLab::stats() const {
  return {shared_->pretrain_jobs.load(), shared_->training_jobs.load(), shared_->cache_hits.load()};
}

std::shared_ptr<const Baseline> CoalitionLab::baseline(std::uint64_t seed) {
  ensure_baselines({seed});
  std::lock_guard lock(shared_->mutex);
  return shared_->baselines.at(seed);
}

void CoalitionLab::ensure_baselines(const std::vector<std::uint64_t>& seeds) {
  std::vector<std::uint64_t> missing;
  {
    std::lock_guard lock(shared_->mutex);
    for (auto s : seeds)
      if (!shared_->baselines.count(s) && std::find(missing.begin(), missing.end(), s) == missing.end())
        missing.push_back(s);
  }
  parallel_for(missing.size(), workers_, [&](std::size_t k) {
    const auto seed = missing[k];
    std::optional<Baseline> b;
    if (cache_) b = cache_->load_baseline(exp_->problem, base_hash_, seed);
    if (!b) {
      spdlog::debug("pre-training baseline for seed {}", seed);
      b = pretrain_baseline(exp_->net, exp_->train, exp_->validation, exp_->protocol, seed);
      ++shared_->pretrain_jobs;
      if (cache_) cache_->store_baseline(exp_->problem, base_hash_, seed, *b);
    }
    std::lock_guard lock(shared_->mutex);
    shared_->baselines.emplace(seed, std::make_shared<const Baseline>(std::move(*b)));
  });
}

std::vector<CoalitionResult> CoalitionLab::run(const std::vector<rules::Coalition>& coalitions) {
  for (const auto& c : coalitions)
    if (c.n != exp_->rules.size()) throw std::invalid_argument("coalition size does not match the rule set");
  struct Job {
    std::uint64_t seed;
    rules::Coalition coalition;
    std::string hash;
  };
  std::vector<Job> jobs;
  std::set<std::pair<std::uint64_t, std::uint32_t>> seen;
  for (auto seed : exp_->protocol.seeds)
    for (const auto& c : coalitions)
      if (seen.insert({seed, c.mask}).second) jobs.push_back({seed, c, coalition_hash(c)});
  std::sort(jobs.begin(), jobs.end(),
            [](const Job& a, const Job& b) { return std::tie(a.seed, a.coalition.mask) < std::tie(b.seed, b.coalition.mask); });

  std::vector<std::optional<CoalitionResult>> results(jobs.size());
  std::vector<std::uint64_t> need_seeds;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (cache_) results[k] = cache_->load(exp_->problem, jobs[k].hash, jobs[k].seed);
    if (results[k]) {
      results[k]->coalition = jobs[k].coalition;
      ++shared_->cache_hits;
    } else {
      need_seeds.push_back(jobs[k].seed);
    }
  }
  ensure_baselines(need_seeds);

  const JobInputs in{&exp_->rules, colloc_.get(), &exp_->train, &exp_->validation, &exp_->test, &exp_->protocol};
  std::vector<std::size_t> todo;
  for (std::size_t k = 0; k < jobs.size(); ++k)
    if (!results[k]) todo.push_back(k);
  if (!todo.empty()) spdlog::info("{}: training {} coalition jobs ({} cached)", exp_->problem, todo.size(), jobs.size() - todo.size());
  std::atomic<std::size_t> done{0};
  parallel_for(todo.size(), workers_, [&](std::size_t t) {
    const auto& job = jobs[todo[t]];
    std::shared_ptr<const Baseline> base;
    {
      std::lock_guard lock(shared_->mutex);
      base = shared_->baselines.at(job.seed);
    }
    auto r = finetune_coalition(*base, job.coalition, in, job.seed);
    r.config_hash = job.hash;
    ++shared_->training_jobs;
    if (r.failed) spdlog::warn("coalition {} (seed {}) diverged", job.coalition.to_string(), job.seed);
    if (cache_) cache_->store(exp_->problem, job.hash, job.seed, r);
    results[todo[t]] = std::move(r);
    const auto d = ++done;
    if (d % 16 == 0 || d == todo.size()) spdlog::debug("{}/{} coalition jobs finished", d, todo.size());
  });

  std::vector<CoalitionResult> out;
  out.reserve(jobs.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace rulewise::lab
