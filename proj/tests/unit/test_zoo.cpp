#include <doctest.h>

#include "rulewise/common/error.hpp"
#include "rulewise/zoo/data.hpp"
#include "rulewise/zoo/problem.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

using namespace rulewise;
using namespace rulewise::zoo;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent reference for the convection-diffusion problem: with u = exp(2x - t) w,
// w solves w_t = 0.25 w_xx on [0, 2] with zero ends, expanded in sin(n pi x / 2).
class EigenSeries {
 public:
  explicit EigenSeries(int modes) {
    const int m = 20000;  // Simpson panels
    const double h = 2.0 / m;
    for (int n = 1; n <= modes; ++n) {
      double s = 0.0;
      for (int k = 0; k <= m; ++k) {
        const double x = h * k;
        const double w = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        s += w * std::sin(kPi * x) * std::exp(-3.0 * x) * std::sin(n * kPi * x / 2.0);
      }
      coef_.push_back(s * h / 3.0);
    }
  }
  double operator()(double x, double t) const {
    double w = 0.0;
    for (std::size_t n = 1; n <= coef_.size(); ++n) {
      const double k = n * kPi / 2.0;
      w += coef_[n - 1] * std::sin(k * x) * std::exp(-0.25 * k * k * t);
    }
    return std::exp(2.0 * x - t) * w;
  }

 private:
  std::vector<double> coef_;
};

double fd_error(const Dataset& d, const EigenSeries& ref) {
  double worst = 0.0;
  // Early times are skipped: the truncated series, not the solver, dominates there.
  for (Eigen::Index k = 0; k < d.inputs.cols(); ++k)
    if (d.inputs(1, k) >= 0.05) worst = std::max(worst, std::abs(d.outputs(0, k) - ref(d.inputs(0, k), d.inputs(1, k))));
  return worst;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "rulewise_unit_zoo";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("problem definitions") {
  CHECK(make_problem(ProblemId::Burgers).rules.size() == 4);
  CHECK(make_problem(ProblemId::KdV).rules.size() == 3);
  CHECK(make_problem(ProblemId::KleinGordon).rules.size() == 4);
  CHECK(make_problem(ProblemId::ConvDiff).rules.size() == 4);
  CHECK(make_problem(ProblemId::MultiVar).rules.size() == 5);
  CHECK(make_problem(ProblemId::Pde2D).rules.size() == 7);
  auto b = make_problem(ProblemId::Burgers);
  CHECK(b.default_net.hidden_layers == 4);
  CHECK(b.default_net.hidden_width == 50);
  CHECK(b.default_net.activation == ad::Activation::Sin);
  CHECK(b.default_collocation.interior == std::vector<std::size_t>{200, 200});
  CHECK(make_problem(ProblemId::ConvDiff).default_net.activation == ad::Activation::Tanh);
  CHECK(make_problem(ProblemId::MultiVar).default_net.activation == ad::Activation::ReLU);
  CHECK(make_problem(ProblemId::MultiVar).default_net.hidden_layers == 2);
  CHECK(b.rules.rule(0).scope == rules::Scope::Global);
  CHECK(b.rules.rule(1).scope == rules::Scope::Local);
  CHECK(parse_problem_id("KG") == ProblemId::KleinGordon);
  CHECK_THROWS_AS(parse_problem_id("navier"), ConfigError);
  auto inner = make_problem(ProblemId::MultiVar, MultivarMode::Inner);
  CHECK(inner.rules.rule(0).region.box.axes[0].hi == doctest::Approx(kPi));
  CHECK(make_problem(ProblemId::MultiVar).rules.rule(0).region.box.axes[1].hi == doctest::Approx(2 * kPi));
}

TEST_CASE("multivariable generator values") {
  Box origin{{{0.0, 0.0}, {0.0, 0.0}}};
  auto d = generate_multivar({1, 1}, origin);
  CHECK(d.outputs(0, 0) == 1.0);
  CHECK(d.outputs(1, 0) == 0.0);
  CHECK(d.outputs(2, 0) == 1.0);
  CHECK(d.outputs(3, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  auto q = generate_multivar({1, 1}, Box{{{kPi / 2, kPi / 2}, {-kPi / 2, -kPi / 2}}});
  CHECK(q.outputs(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(q.outputs(1, 0) == doctest::Approx(std::log(kPi * kPi + 1.0)).epsilon(1e-15));
  auto g = generate_multivar({30, 30});
  CHECK(g.size() == 900);
  CHECK((g.outputs.row(2).array() > 0).all());
  CHECK((g.outputs.row(3).array() > 0).all());
}

TEST_CASE("2-D generator matches the closed form") {
  auto d = generate_pde2d({20, 20});
  for (Eigen::Index k = 0; k < d.inputs.cols(); ++k) {
    const double x = d.inputs(0, k), y = d.inputs(1, k);
    CHECK(d.outputs(0, k) == x * x * std::exp(-y));
    if (x == 0.0) CHECK(d.outputs(0, k) == 0.0);
  }
  CHECK(pde2d_exact(1.0, 0.0) == 1.0);
  CHECK(pde2d_exact(1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("Crank-Nicolson solver converges at second order") {
  EigenSeries ref(200);
  auto coarse = solve_convdiff_fd(161, 81);
  auto fine = solve_convdiff_fd(321, 161);
  const double e1 = fd_error(coarse, ref), e2 = fd_error(fine, ref);
  CHECK(e1 / e2 > 3.5);
  CHECK(e1 / e2 < 4.5);
  auto d = solve_convdiff_fd(201, 101);
  CHECK(fd_error(d, ref) < 1e-3);
  CHECK(d.size() == 201 * 101);
  for (Eigen::Index k = 0; k < d.inputs.cols(); ++k) {
    const double x = d.inputs(0, k), t = d.inputs(1, k);
    if (t == 0.0 && x > 0.0 && x < 2.0) CHECK(d.outputs(0, k) == std::sin(kPi * x) * std::exp(-x));
    if (x == 0.0 || x == 2.0) CHECK(d.outputs(0, k) == 0.0);
  }
  CHECK_THROWS_AS(solve_convdiff_fd(4, 10), DataError);
  CHECK_THROWS_AS(solve_convdiff_fd(10, 1), DataError);
}

TEST_CASE("ingest-only problems refuse generation") {
  CHECK_THROWS_AS(reference_data(make_problem(ProblemId::Burgers)), DataError);
  CHECK_NOTHROW(reference_data(make_problem(ProblemId::Pde2D)));
}

TEST_CASE("ingest checks the published grid size") {
  auto p = make_problem(ProblemId::Burgers);
  auto path = scratch("burgers.csv");
  {
    std::ofstream f(path);
    f << "x,t,u\n";
    for (int i = 0; i < 256; ++i)
      for (int j = 0; j < 100; ++j) f << -1.0 + 2.0 * i / 255.0 << ',' << j / 99.0 << ',' << 0.1 * i << '\n';
  }
  CHECK(ingest_dataset(path, p, {true}).size() == 25600);
  auto kdv = make_problem(ProblemId::KdV);
  auto kpath = scratch("kdv.csv");
  {
    std::ofstream f(kpath);
    f << "x,t,u\n";
    for (int i = 0; i < 512; ++i)
      for (int j = 0; j < 201; ++j) f << -1.0 + 2.0 * i / 511.0 << ',' << j / 200.0 << ",0\n";
  }
  CHECK(ingest_dataset(kpath, kdv, {true}).size() == 102912);
  CHECK_THROWS_AS(ingest_dataset(path, kdv, {true}), DataError);
  auto empty = scratch("empty.csv");
  { std::ofstream f(empty); }
  CHECK_THROWS_AS(ingest_dataset(empty, p), DataError);
}

TEST_CASE("splits partition rows and respect regions") {
  auto p = make_problem(ProblemId::ConvDiff);
  auto data = solve_convdiff_fd(41, 21);
  SplitSpec s{SplitMode::OutDistribution, 100, 50, 0.0, 3};
  auto sp = make_split(data, s, p);
  CHECK(sp.train.size() == 100);
  CHECK(sp.validation.size() == 10);
  CHECK(sp.test.size() == 50);
  CHECK((sp.train.inputs.row(1).array() < 0.5).all());
  CHECK((sp.validation.inputs.row(1).array() < 0.5).all());
  CHECK((sp.test.inputs.row(1).array() >= 0.5).all());
  std::set<std::size_t> rows(sp.manifest.train_rows.begin(), sp.manifest.train_rows.end());
  for (auto r : sp.manifest.validation_rows) CHECK(rows.insert(r).second);
  for (auto r : sp.manifest.test_rows) CHECK(rows.insert(r).second);
  auto again = make_split(data, s, p);
  CHECK(again.manifest.train_rows == sp.manifest.train_rows);
  CHECK(again.manifest.test_rows == sp.manifest.test_rows);
  s.seed = 4;
  CHECK(make_split(data, s, p).manifest.train_rows != sp.manifest.train_rows);

  SplitSpec none{SplitMode::InDistribution, 0, 0, 0.0, 1};
  auto z = make_split(data, none, p);
  CHECK(z.train.empty());
  CHECK(z.validation.empty());
  CHECK(z.test.size() == data.size());

  SplitSpec too_many{SplitMode::InDistribution, 900, 10, 0.0, 1};
  CHECK_THROWS_AS(make_split(data, too_many, p), DataError);
  CHECK(validation_volume(1000) == 100);
  CHECK(validation_volume(10) == 10);
  CHECK(to_json(sp.manifest)["train_rows"].size() == 100);
}

TEST_CASE("out-of-distribution regions of the analytic problems") {
  auto mv = make_problem(ProblemId::MultiVar);
  auto sp = make_split(reference_data(mv), {SplitMode::OutDistribution, 100, 200, 0.0, 1}, mv);
  CHECK((sp.test.inputs.array() >= kPi - 1e-12).all());
  CHECK((sp.train.inputs.row(1).array() <= 0.0).all());
  auto pd = make_problem(ProblemId::Pde2D);
  auto s2 = make_split(reference_data(pd), {SplitMode::OutDistribution, 100, 0, 0.0, 1}, pd);
  for (Eigen::Index k = 0; k < s2.test.inputs.cols(); ++k) {
    CHECK(s2.test.inputs(0, k) >= 0.25);
    CHECK(s2.test.inputs(1, k) <= 0.75);
  }
  for (Eigen::Index k = 0; k < s2.train.inputs.cols(); ++k) {
    const double x = s2.train.inputs(0, k), y = s2.train.inputs(1, k);
    CHECK_FALSE((x >= 0.25 && x <= 0.75 && y >= 0.25 && y <= 0.75));
  }
}

TEST_CASE("observation noise has the requested relative scale") {
  auto d = generate_multivar({100, 100});
  CHECK(add_noise(d, 0.0, 5).outputs == d.outputs);
  auto n = add_noise(d, 0.3, 5);
  for (Eigen::Index c = 0; c < 4; ++c) {
    Eigen::ArrayXd diff = (n.outputs.row(c) - d.clean_outputs.row(c)).transpose().array();
    Eigen::ArrayXd clean = d.clean_outputs.row(c).transpose().array();
    auto sd = [](const Eigen::ArrayXd& v) { return std::sqrt((v - v.mean()).square().mean()); };
    const double ratio = sd(diff) / sd(clean);
    CHECK(ratio > 0.29);
    CHECK(ratio < 0.31);
  }
  CHECK(add_noise(d, 0.3, 5).outputs == n.outputs);
  CHECK(n.clean_outputs == d.clean_outputs);

  auto p = make_problem(ProblemId::MultiVar);
  auto sp = make_split(reference_data(p), {SplitMode::InDistribution, 500, 100, 0.2, 2}, p);
  CHECK(sp.train.outputs != sp.train.clean_outputs);
  CHECK(sp.test.outputs == sp.test.clean_outputs);
}
