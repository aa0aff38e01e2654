#include "rulewise/common/dataset.hpp"

#include "rulewise/common/error.hpp"
#include "rulewise/common/text_format.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rulewise {

std::string to_string(DataSource source) {
  switch (source) {
    case DataSource::Analytic: return "analytic";
    case DataSource::FiniteDifference: return "finite_difference";
    case DataSource::Ingested: return "ingested";
  }
  return "unknown";
}

void Dataset::validate() const {
  const auto n = inputs.cols();
  if (static_cast<std::size_t>(inputs.rows()) != input_names.size() && n > 0)
    throw std::invalid_argument("dataset input rows do not match input names");
  if (outputs.cols() != n || clean_outputs.cols() != n)
    throw std::invalid_argument("dataset column counts differ");
  if (n > 0 && (static_cast<std::size_t>(outputs.rows()) != output_names.size() ||
                clean_outputs.rows() != outputs.rows()))
    throw std::invalid_argument("dataset output rows do not match output names");
}

Dataset Dataset::select(const std::vector<std::size_t>& indices) const {
  Dataset out = empty_like();
  const auto n = static_cast<Eigen::Index>(indices.size());
  out.inputs.resize(inputs.rows(), n);
  out.outputs.resize(outputs.rows(), n);
  out.clean_outputs.resize(clean_outputs.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]);
    if (src >= inputs.cols()) throw std::out_of_range("dataset index out of range");
    out.inputs.col(j) = inputs.col(src);
    out.outputs.col(j) = outputs.col(src);
    out.clean_outputs.col(j) = clean_outputs.col(src);
  }
  return out;
}

Dataset Dataset::empty_like() const {
  Dataset out;
  out.input_names = input_names;
  out.output_names = output_names;
  out.source = source;
  out.inputs.resize(static_cast<Eigen::Index>(input_names.size()), 0);
  out.outputs.resize(static_cast<Eigen::Index>(output_names.size()), 0);
  out.clean_outputs.resize(static_cast<Eigen::Index>(output_names.size()), 0);
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  std::string header;
  for (const auto& n : data.input_names) header += (header.empty() ? "" : ",") + n;
  for (const auto& n : data.output_names) header += "," + n;
  out << header << '\n';
  for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) {
    std::string line;
    for (Eigen::Index r = 0; r < data.inputs.rows(); ++r) {
      if (r > 0) line += ',';
      line += format_double(data.inputs(r, j));
    }
    for (Eigen::Index r = 0; r < data.clean_outputs.rows(); ++r) {
      line += ',';
      line += format_double(data.clean_outputs(r, j));
    }
    out << line << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    auto b = cur.find_first_not_of(" \t\r");
    auto e = cur.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string{} : cur.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

Dataset read_csv(const std::filesystem::path& path, const std::vector<std::string>& input_names,
                 const std::vector<std::string>& output_names) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset " + path.string() + " is empty");
  const auto header = split_fields(line);
  std::vector<std::string> expected = input_names;
  expected.insert(expected.end(), output_names.begin(), output_names.end());
  if (header != expected) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
    throw DataError("header mismatch in " + path.string() + ": expected '" + want + "'");
  }
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != expected.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(expected.size()) + " fields");
    for (const auto& f : fields) {
      try {
        values.push_back(parse_double(f));
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + f + "'");
      }
    }
    ++rows;
  }
  if (rows == 0) throw DataError("dataset " + path.string() + " has no rows");

  Dataset d;
  d.input_names = input_names;
  d.output_names = output_names;
  d.source = DataSource::Ingested;
  const auto ni = static_cast<Eigen::Index>(input_names.size());
  const auto no = static_cast<Eigen::Index>(output_names.size());
  const auto n = static_cast<Eigen::Index>(rows);
  d.inputs.resize(ni, n);
  d.outputs.resize(no, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto* row = values.data() + j * (ni + no);
    for (Eigen::Index r = 0; r < ni; ++r) d.inputs(r, j) = row[r];
    for (Eigen::Index r = 0; r < no; ++r) d.outputs(r, j) = row[ni + r];
  }
  d.clean_outputs = d.outputs;
  return d;
}

}  // namespace rulewise
