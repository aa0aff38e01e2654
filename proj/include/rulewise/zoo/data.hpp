#pragma once

#include "rulewise/common/dataset.hpp"
#include "rulewise/zoo/problem.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace rulewise::zoo {

/// Exact values of the multivariable system on a grid over `box`
/// (default: a in [0, pi], b in [-pi, 0]). Natural logarithm.
Dataset generate_multivar(const std::vector<std::size_t>& shape, const Box& box);
Dataset generate_multivar(const std::vector<std::size_t>& shape);

/// x^2 exp(-y) on a grid over [0, 1]^2.
Dataset generate_pde2d(const std::vector<std::size_t>& shape);

/// Crank-Nicolson solution of u_t + u_x = 0.25 u_xx on x in [0, 2], t in [0, 1] with
/// u(x, 0) = sin(pi x) exp(-x) and zero Dirichlet ends. Rows ordered x fastest.
/// Throws DataError when the grid is too coarse (cell Peclet number above 2).
Dataset solve_convdiff_fd(std::size_t space_points, std::size_t time_points);

/// Reference data for a self-generated problem, covering every split region.
/// Throws DataError for ingest-only problems.
Dataset reference_data(const ProblemDef& problem);

struct IngestOptions {
  /// Require the published full-grid row count.
  bool expect_full_grid = false;
};

/// Reads a reference CSV whose header names the problem's inputs then outputs.
/// Rows outside the domain are kept and counted in a warning.
Dataset ingest_dataset(const std::filesystem::path& path, const ProblemDef& problem, IngestOptions options = {});

struct SplitSpec {
  SplitMode mode = SplitMode::InDistribution;
  std::size_t train_volume = 0;
  /// 0 takes every remaining row of the test pool.
  std::size_t test_volume = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

/// Held-out validation rows drawn from the training region: a tenth of the
/// training volume, at least 10, and none when there is no training data.
std::size_t validation_volume(std::size_t train_volume);

struct SplitManifest {
  SplitSpec spec;
  std::string train_region;
  std::string test_region;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  std::vector<std::size_t> test_rows;
};

nlohmann::json to_json(const SplitManifest& manifest);

struct Split {
  Dataset train;
  Dataset validation;
  Dataset test;
  SplitManifest manifest;
};

/// Seeded sampling without replacement. Observation noise is applied to the
/// training and validation outputs only; test outputs stay clean.
Split make_split(const Dataset& data, const SplitSpec& spec, const ProblemDef& problem);

/// u + eps * std(u) * N(0, 1) per scalar output, std taken per channel over `data`.
Dataset add_noise(const Dataset& data, double eps, std::uint64_t seed);

}  // namespace rulewise::zoo
