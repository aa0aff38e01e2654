#pragma once

#include "rulewise/autodiff/checkpoint.hpp"
#include "rulewise/lab/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace rulewise::lab {

nlohmann::json to_json(const CoalitionResult& r);
/// Throws DataError on a malformed record.
CoalitionResult result_from_json(const nlohmann::json& j);

/// On-disk store of coalition results and baseline checkpoints:
/// <root>/<problem>/<hash>/seed-<seed>.json and <root>/<problem>/baselines/<hash>/seed-<seed>.ckpt.
/// Writes are atomic, so concurrent writers of the same key leave one complete record.
class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path root) : root_(std::move(root)) {}

  [[nodiscard]] const std::filesystem::path& root() const { return root_; }

  [[nodiscard]] std::optional<CoalitionResult> load(const std::string& problem, const std::string& hash,
                                                    std::uint64_t seed) const;
  void store(const std::string& problem, const std::string& hash, std::uint64_t seed, const CoalitionResult& r) const;

  [[nodiscard]] std::optional<Baseline> load_baseline(const std::string& problem, const std::string& hash,
                                                      std::uint64_t seed) const;
  void store_baseline(const std::string& problem, const std::string& hash, std::uint64_t seed,
                      const Baseline& b) const;

 private:
  [[nodiscard]] std::filesystem::path result_path(const std::string& problem, const std::string& hash,
                                                  std::uint64_t seed) const;
  std::filesystem::path root_;
};

}  // namespace rulewise::lab
