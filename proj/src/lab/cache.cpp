#include "rulewise/lab/cache.hpp"

#include "rulewise/common/atomic_file.hpp"
#include "rulewise/common/error.hpp"

#include <cmath>
#include <limits>

namespace rulewise::lab {

namespace {

// JSON has no NaN; missing values travel as null.
nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

nlohmann::json to_json(const CoalitionResult& r) {
  nlohmann::json ch = nlohmann::json::array();
  for (double v : r.channel_mse) ch.push_back(number(v));
  return {{"mask", r.coalition.mask},
          {"rules", r.coalition.n},
          {"members", r.coalition.to_string()},
          {"seed", r.seed},
          {"test_mse", number(r.test_mse)},
          {"channel_mse", ch},
          {"validation_mse", number(r.validation_mse)},
          {"epochs_run", r.epochs_run},
          {"config_hash", r.config_hash},
          {"failed", r.failed},
          {"pre_injection_data_loss", number(r.pre_injection_data_loss)},
          {"injection_loss", number(r.injection_loss)},
          {"final_loss", number(r.final_loss)}};
}

CoalitionResult result_from_json(const nlohmann::json& j) {
  try {
    CoalitionResult r;
    r.coalition = rules::Coalition(j.at("mask").get<std::uint32_t>(), j.at("rules").get<std::size_t>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.test_mse = number_from(j.at("test_mse"));
    for (const auto& v : j.at("channel_mse")) r.channel_mse.push_back(number_from(v));
    r.validation_mse = number_from(j.at("validation_mse"));
    r.epochs_run = j.at("epochs_run").get<std::size_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.failed = j.at("failed").get<bool>();
    r.pre_injection_data_loss = number_from(j.at("pre_injection_data_loss"));
    r.injection_loss = number_from(j.at("injection_loss"));
    r.final_loss = number_from(j.at("final_loss"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed coalition record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed coalition record: ") + e.what());
  }
}

std::filesystem::path ResultCache::result_path(const std::string& problem, const std::string& hash,
                                               std::uint64_t seed) const {
  return root_ / problem / hash / ("seed-" + std::to_string(seed) + ".json");
}

std::optional<CoalitionResult> ResultCache::load(const std::string& problem, const std::string& hash,
                                                 std::uint64_t seed) const {
  const auto p = result_path(problem, hash, seed);
  if (!std::filesystem::exists(p)) return std::nullopt;
  try {
    return result_from_json(nlohmann::json::parse(read_file(p)));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

void ResultCache::store(const std::string& problem, const std::string& hash, std::uint64_t seed,
                        const CoalitionResult& r) const {
  write_file_atomic(result_path(problem, hash, seed), to_json(r).dump(1) + "\n");
}

std::optional<Baseline> ResultCache::load_baseline(const std::string& problem, const std::string& hash,
                                                   std::uint64_t seed) const {
  const auto dir = root_ / problem / "baselines" / hash;
  const auto ckpt = dir / ("seed-" + std::to_string(seed) + ".ckpt");
  const auto meta = dir / ("seed-" + std::to_string(seed) + ".json");
  if (!std::filesystem::exists(ckpt) || !std::filesystem::exists(meta)) return std::nullopt;
  auto cp = ad::load_checkpoint(ckpt);
  if (!cp.optimizer) throw DataError(ckpt.string() + ": baseline checkpoint lacks optimizer state");
  const auto j = nlohmann::json::parse(read_file(meta));
  return Baseline{std::move(cp.network), std::move(*cp.optimizer), j.at("epochs").get<std::size_t>(),
                  number_from(j.at("train_data_loss"))};
}

void ResultCache::store_baseline(const std::string& problem, const std::string& hash, std::uint64_t seed,
                                 const Baseline& b) const {
  const auto dir = root_ / problem / "baselines" / hash;
  ad::save_checkpoint({b.network, b.optimizer}, dir / ("seed-" + std::to_string(seed) + ".ckpt"));
  write_file_atomic(dir / ("seed-" + std::to_string(seed) + ".json"),
                    nlohmann::json{{"epochs", b.epochs}, {"train_data_loss", number(b.train_data_loss)}}.dump(1) + "\n");
}

}  // namespace rulewise::lab
