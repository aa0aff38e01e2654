#pragma once

#include "rulewise/common/domain.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace rulewise {

enum class DataSource { Analytic, FiniteDifference, Ingested };

std::string to_string(DataSource source);

/// Samples stored column-wise. `outputs` are the observed values (possibly noisy),
/// `clean_outputs` the noise-free reference.
struct Dataset {
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;
  Points inputs;
  Eigen::MatrixXd outputs;
  Eigen::MatrixXd clean_outputs;
  DataSource source = DataSource::Analytic;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
  [[nodiscard]] bool empty() const { return size() == 0; }
  [[nodiscard]] std::size_t input_dim() const { return input_names.size(); }
  [[nodiscard]] std::size_t output_dim() const { return output_names.size(); }

  /// Throws std::invalid_argument when shapes disagree.
  void validate() const;

  /// Columns `indices` of this dataset, same names and source.
  [[nodiscard]] Dataset select(const std::vector<std::size_t>& indices) const;

  /// An empty dataset sharing names and source.
  [[nodiscard]] Dataset empty_like() const;
};

/// Writes `x,t,u`-style CSV (inputs then clean outputs). 17 significant digits.
void write_csv(const Dataset& data, const std::filesystem::path& path);

/// Reads a CSV with a header. Column names must equal `input_names` then
/// `output_names`; throws DataError on header mismatch, malformed rows or an
/// empty body.
Dataset read_csv(const std::filesystem::path& path, const std::vector<std::string>& input_names,
                 const std::vector<std::string>& output_names);

}  // namespace rulewise
