#include "rulewise/zoo/data.hpp"

#include "rulewise/common/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace rulewise::zoo {

namespace {

constexpr double kPi = std::numbers::pi;

Dataset grid_dataset(const std::vector<std::string>& in, const std::vector<std::string>& out, Points pts,
                     Eigen::MatrixXd values, DataSource source) {
  Dataset d;
  d.input_names = in;
  d.output_names = out;
  d.inputs = std::move(pts);
  d.clean_outputs = std::move(values);
  d.outputs = d.clean_outputs;
  d.source = source;
  return d;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  Dataset d = a;
  d.inputs.resize(a.inputs.rows(), a.inputs.cols() + b.inputs.cols());
  d.inputs << a.inputs, b.inputs;
  d.outputs.resize(a.outputs.rows(), a.outputs.cols() + b.outputs.cols());
  d.outputs << a.outputs, b.outputs;
  d.clean_outputs.resize(a.clean_outputs.rows(), a.clean_outputs.cols() + b.clean_outputs.cols());
  d.clean_outputs << a.clean_outputs, b.clean_outputs;
  return d;
}

// Thomas algorithm for a constant-coefficient tridiagonal system.
void solve_tridiagonal(double lower, double diag, double upper, std::vector<double>& rhs) {
  const std::size_t n = rhs.size();
  std::vector<double> c(n);
  c[0] = upper / diag;
  rhs[0] /= diag;
  for (std::size_t i = 1; i < n; ++i) {
    const double m = diag - lower * c[i - 1];
    c[i] = upper / m;
    rhs[i] = (rhs[i] - lower * rhs[i - 1]) / m;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

}  // namespace

Dataset generate_multivar(const std::vector<std::size_t>& shape, const Box& box) {
  Points pts = tensor_grid(box, shape);
  Eigen::MatrixXd v(4, pts.cols());
  for (Eigen::Index k = 0; k < pts.cols(); ++k) {
    const double a = pts(0, k), b = pts(1, k);
    const double c = std::abs(std::sin(a) - std::cos(b));
    const double d = std::log((a - b) * (a - b) + 1.0);
    const double e = 0.5 * (1.0 + c * c);
    v.col(k) << c, d, e, std::exp(-e);
  }
  return grid_dataset({"a", "b"}, {"c", "d", "e", "f"}, std::move(pts), std::move(v), DataSource::Analytic);
}

Dataset generate_multivar(const std::vector<std::size_t>& shape) {
  return generate_multivar(shape, Box{{{0.0, kPi}, {-kPi, 0.0}}});
}

Dataset generate_pde2d(const std::vector<std::size_t>& shape) {
  Points pts = tensor_grid(Box{{{0.0, 1.0}, {0.0, 1.0}}}, shape);
  Eigen::MatrixXd v(1, pts.cols());
  for (Eigen::Index k = 0; k < pts.cols(); ++k) v(0, k) = pde2d_exact(pts(0, k), pts(1, k));
  return grid_dataset({"x", "y"}, {"u"}, std::move(pts), std::move(v), DataSource::Analytic);
}

Dataset solve_convdiff_fd(std::size_t space_points, std::size_t time_points) {
  constexpr double velocity = 1.0, diffusion = 0.25, length = 2.0, horizon = 1.0;
  if (space_points < 3 || time_points < 2) throw DataError("convection-diffusion grid needs at least 3x2 points");
  const double h = length / static_cast<double>(space_points - 1);
  const double dt = horizon / static_cast<double>(time_points - 1);
  if (velocity * h / diffusion > 2.0)
    throw DataError("convection-diffusion grid too coarse: cell Peclet number " + std::to_string(velocity * h / diffusion) +
                    " exceeds 2");
  const auto nx = space_points;
  std::vector<double> u(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = h * static_cast<double>(i);
    u[i] = std::sin(kPi * x) * std::exp(-x);
  }
  u.front() = 0.0;
  u.back() = 0.0;

  // u_t = -v u_x + D u_xx with central differences, averaged between time levels.
  const double a = dt / 2.0 * (diffusion / (h * h) + velocity / (2.0 * h));  // coefficient of u_{i-1}
  const double b = dt / 2.0 * (-2.0 * diffusion / (h * h));
  const double c = dt / 2.0 * (diffusion / (h * h) - velocity / (2.0 * h));  // coefficient of u_{i+1}

  Points pts(2, static_cast<Eigen::Index>(nx * time_points));
  Eigen::MatrixXd vals(1, pts.cols());
  std::vector<double> rhs(nx - 2);
  for (std::size_t n = 0; n < time_points; ++n) {
    if (n > 0) {
      for (std::size_t i = 1; i + 1 < nx; ++i) rhs[i - 1] = a * u[i - 1] + (1.0 + b) * u[i] + c * u[i + 1];
      solve_tridiagonal(-a, 1.0 - b, -c, rhs);
      for (std::size_t i = 1; i + 1 < nx; ++i) u[i] = rhs[i - 1];
    }
    const double t = n + 1 == time_points ? horizon : dt * static_cast<double>(n);
    for (std::size_t i = 0; i < nx; ++i) {
      const auto col = static_cast<Eigen::Index>(n * nx + i);
      pts(0, col) = i + 1 == nx ? length : h * static_cast<double>(i);
      pts(1, col) = t;
      vals(0, col) = u[i];
    }
  }
  return grid_dataset({"x", "t"}, {"u"}, std::move(pts), std::move(vals), DataSource::FiniteDifference);
}

Dataset reference_data(const ProblemDef& problem) {
  switch (problem.id) {
    case ProblemId::MultiVar:
      return concat(generate_multivar({100, 100}),
                    generate_multivar({50, 50}, Box{{{kPi, 2.0 * kPi}, {kPi, 2.0 * kPi}}}));
    case ProblemId::Pde2D: return generate_pde2d({101, 101});
    case ProblemId::ConvDiff: return solve_convdiff_fd(201, 101);
    default:
      throw DataError(problem.name() + " data is ingested, not generated: supply a CSV with header " +
                      problem.input_names[0] + "," + problem.input_names[1] + "," + problem.output_names[0] +
                      (problem.full_grid_rows ? " (" + std::to_string(*problem.full_grid_rows) + " rows on the full grid)"
                                              : std::string()));
  }
}

Dataset ingest_dataset(const std::filesystem::path& path, const ProblemDef& problem, IngestOptions options) {
  Dataset d = read_csv(path, problem.input_names, problem.output_names);
  if (options.expect_full_grid && problem.full_grid_rows && d.size() != *problem.full_grid_rows)
    throw DataError(path.string() + ": expected " + std::to_string(*problem.full_grid_rows) + " rows for the full " +
                    problem.name() + " grid, found " + std::to_string(d.size()));
  if (!d.outputs.allFinite()) throw DataError(path.string() + ": non-finite output values");
  std::size_t outside = 0;
  for (Eigen::Index k = 0; k < d.inputs.cols(); ++k) outside += !problem.domain.contains(d.inputs.col(k), 1e-9);
  if (outside > 0)
    spdlog::warn("{}: {} of {} rows lie outside the {} domain", path.string(), outside, d.size(), problem.name());
  return d;
}

std::size_t validation_volume(std::size_t train_volume) {
  if (train_volume == 0) return 0;
  return std::max<std::size_t>(10, (train_volume + 9) / 10);
}

Dataset add_noise(const Dataset& data, double eps, std::uint64_t seed) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("noise level must be finite and non-negative");
  Dataset out = data;
  if (eps == 0.0 || data.empty()) return out;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto n = static_cast<double>(data.size());
  for (Eigen::Index k = 0; k < data.clean_outputs.rows(); ++k) {
    const auto row = data.clean_outputs.row(k).array();
    const double mean = row.sum() / n;
    const double sd = std::sqrt((row - mean).square().sum() / n);
    for (Eigen::Index j = 0; j < row.size(); ++j) out.outputs(k, j) = data.clean_outputs(k, j) + eps * sd * z(gen);
  }
  return out;
}

nlohmann::json to_json(const SplitManifest& m) {
  return nlohmann::json{{"mode", to_string(m.spec.mode)},
                        {"train_volume", m.spec.train_volume},
                        {"validation_volume", m.validation_rows.size()},
                        {"test_volume", m.test_rows.size()},
                        {"noise", m.spec.noise},
                        {"seed", m.spec.seed},
                        {"train_region", m.train_region},
                        {"test_region", m.test_region},
                        {"train_rows", m.train_rows},
                        {"validation_rows", m.validation_rows},
                        {"test_rows", m.test_rows}};
}

Split make_split(const Dataset& data, const SplitSpec& spec, const ProblemDef& problem) {
  data.validate();
  if (data.input_names != problem.input_names || data.output_names != problem.output_names)
    throw DataError("dataset columns do not match problem " + problem.name());
  const auto regions = problem.regions(spec.mode);
  std::vector<std::size_t> train_pool, test_pool;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Eigen::VectorXd p = data.inputs.col(static_cast<Eigen::Index>(k));
    if (regions.train(p)) train_pool.push_back(k);
    if (spec.mode == SplitMode::OutDistribution && regions.test(p)) test_pool.push_back(k);
  }
  std::mt19937_64 gen(spec.seed);
  std::shuffle(train_pool.begin(), train_pool.end(), gen);
  const auto n_val = validation_volume(spec.train_volume);
  const auto need = spec.train_volume + n_val;
  if (need > train_pool.size())
    throw DataError("requested " + std::to_string(spec.train_volume) + " training + " + std::to_string(n_val) +
                    " validation rows but the training region holds " + std::to_string(train_pool.size()));
  SplitManifest man{spec, regions.train_description, regions.test_description, {}, {}, {}};
  man.train_rows.assign(train_pool.begin(), train_pool.begin() + static_cast<std::ptrdiff_t>(spec.train_volume));
  man.validation_rows.assign(train_pool.begin() + static_cast<std::ptrdiff_t>(spec.train_volume),
                             train_pool.begin() + static_cast<std::ptrdiff_t>(need));
  if (spec.mode == SplitMode::InDistribution) {
    test_pool.assign(train_pool.begin() + static_cast<std::ptrdiff_t>(need), train_pool.end());
  } else {
    std::shuffle(test_pool.begin(), test_pool.end(), gen);
  }
  const auto n_test = spec.test_volume == 0 ? test_pool.size() : spec.test_volume;
  if (n_test > test_pool.size() || n_test == 0)
    throw DataError("requested " + std::to_string(n_test) + " test rows but only " + std::to_string(test_pool.size()) +
                    " are available");
  man.test_rows.assign(test_pool.begin(), test_pool.begin() + static_cast<std::ptrdiff_t>(n_test));

  Split s;
  s.train = add_noise(data.select(man.train_rows), spec.noise, spec.seed ^ 0x6e6f697365ULL);
  s.validation = add_noise(data.select(man.validation_rows), spec.noise, spec.seed ^ 0x76616c6964ULL);
  s.test = data.select(man.test_rows);
  s.test.outputs = s.test.clean_outputs;
  s.manifest = std::move(man);
  return s;
}

}  // namespace rulewise::zoo
