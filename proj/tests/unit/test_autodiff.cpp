#include <doctest.h>

#include "rulewise/autodiff/adam.hpp"
#include "rulewise/autodiff/checkpoint.hpp"
#include "rulewise/autodiff/finite_difference.hpp"
#include "rulewise/autodiff/jet.hpp"
#include "rulewise/autodiff/network.hpp"
#include "rulewise/common/error.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace rulewise;
using namespace rulewise::ad;

namespace {

double act(Activation a, double z) {
  switch (a) {
    case Activation::Sin: return std::sin(z);
    case Activation::Tanh: return std::tanh(z);
    case Activation::ReLU: return z > 0 ? z : 0.0;
  }
  return 0.0;
}

// k-th derivative of the activation, written out by hand.
double act_derivative(Activation a, unsigned k, double z) {
  if (a == Activation::Sin) return std::sin(z + k * M_PI / 2.0);
  const double t = std::tanh(z);
  const double s = 1.0 - t * t;
  switch (k) {
    case 0: return t;
    case 1: return s;
    case 2: return -2.0 * t * s;
    case 3: return s * (6.0 * t * t - 2.0);
    case 4: return s * (16.0 * t - 24.0 * t * t * t);
  }
  return NAN;
}

// Straight-line forward evaluation, one point at a time, from the documented layout.
Eigen::MatrixXd oracle_forward(const Network& net, const Points& x) {
  const auto& spec = net.spec();
  const auto p = net.parameters();
  Eigen::MatrixXd out(spec.output_dim, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    std::vector<double> h(x.col(c).data(), x.col(c).data() + x.rows());
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
      const auto in = spec.layer_inputs(l), outs = spec.layer_outputs(l);
      std::size_t off = 0;
      for (std::size_t m = 0; m < l; ++m) off += (spec.layer_inputs(m) + 1) * spec.layer_outputs(m);
      std::vector<double> next(outs);
      for (std::size_t i = 0; i < outs; ++i) {
        double z = p[off + in * outs + i];
        for (std::size_t j = 0; j < in; ++j) z += p[off + i * in + j] * h[j];
        next[i] = l + 1 == spec.layer_count() ? z : act(spec.activation, z);
      }
      h = next;
    }
    for (std::size_t k = 0; k < spec.output_dim; ++k) out(static_cast<Eigen::Index>(k), c) = h[k];
  }
  return out;
}

Points random_points(std::size_t dim, std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Points p(dim, n);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = d(g);
  return p;
}

// A single hidden unit: u = w2 * f(w . x + b1) + b2, whose derivatives are closed form.
Network single_unit(Activation a, double w0, double w1, double b1, double w2, double b2) {
  NetworkSpec spec{2, 1, 1, 1, a};
  return Network(spec, {w0, w1, b1, w2, b2}, 0);
}

LossTerm derivative_square_term(const Points& pts, const std::vector<MultiIndex>& reqs) {
  LossTerm term;
  term.sites.push_back({pts, JetPlan(pts.rows(), reqs)});
  std::vector<std::size_t> idx;
  std::vector<double> fact;
  for (const auto& r : reqs) {
    idx.push_back(term.sites[0].plan.index_of(r));
    fact.push_back(multi_factorial(r));
  }
  term.kernel = [idx, fact](std::span<const OutputJets> jets, std::size_t begin, std::size_t end,
                            std::span<Eigen::MatrixXd> adj) {
    const auto& J = jets[0];
    const auto n = end - begin;
    double sum = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (Eigen::Index k = 0; k < J.coefficients.rows(); ++k) {
        double r = 0.3;
        for (std::size_t q = 0; q < idx.size(); ++q) r += (q + 1.0) * fact[q] * J.coefficient(static_cast<std::size_t>(k), idx[q], p);
        sum += r * r;
        for (std::size_t q = 0; q < idx.size(); ++q)
          adj[0](k, static_cast<Eigen::Index>(idx[q] * n + p)) += 2.0 * r * (q + 1.0) * fact[q];
      }
    }
    return sum;
  };
  term.scale = 0.7;
  return term;
}

}  // namespace

TEST_CASE("forward matches straight-line evaluation") {
  for (auto a : {Activation::Sin, Activation::Tanh, Activation::ReLU}) {
    auto net = Network::initialize({3, 2, 3, 7, a}, 11);
    auto pts = random_points(3, 40, 5);
    Eigen::MatrixXd diff = net.forward(pts) - oracle_forward(net, pts);
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("parameter count and layout") {
  NetworkSpec spec{2, 1, 4, 50, Activation::Tanh};
  CHECK(spec.parameter_count() == (2 * 50 + 50) + 3 * (50 * 50 + 50) + (50 + 1));
  auto net = Network::initialize(spec, 1);
  CHECK(net.weight_offset(1) == 150);
  CHECK(net.bias_offset(0) == 100);
  for (std::size_t i = 0; i < 50; ++i) CHECK(net.parameters()[100 + i] == 0.0);
  CHECK(Network::initialize(spec, 1) == net);
  CHECK_FALSE(Network::initialize(spec, 2) == net);
}

TEST_CASE("single unit derivatives match closed forms up to order four") {
  for (auto a : {Activation::Sin, Activation::Tanh}) {
    const double w0 = 0.8, w1 = -1.3, b1 = 0.2, w2 = 1.7;
    auto net = single_unit(a, w0, w1, b1, w2, -0.4);
    auto pts = random_points(2, 25, 3);
    for (unsigned i = 0; i <= 4; ++i) {
      for (unsigned j = 0; i + j <= 4; ++j) {
        auto got = net.input_derivative(pts, {{i, j}, 0});
        for (Eigen::Index c = 0; c < pts.cols(); ++c) {
          const double z = w0 * pts(0, c) + w1 * pts(1, c) + b1;
          double want = w2 * act_derivative(a, i + j, z) * std::pow(w0, i) * std::pow(w1, j);
          if (i + j == 0) want += -0.4;
          CHECK(got[c] == doctest::Approx(want).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("sin of a scaled input has second derivative minus w squared sin") {
  const double w = 3.0;
  NetworkSpec spec{1, 1, 1, 1, Activation::Sin};
  Network net(spec, {w, 0.0, 1.0, 0.0}, 0);
  auto pts = random_points(1, 10, 9);
  auto d2 = net.input_derivative(pts, {{2}, 0});
  for (Eigen::Index c = 0; c < pts.cols(); ++c)
    CHECK(d2[c] == doctest::Approx(-w * w * std::sin(w * pts(0, c))).epsilon(1e-13));
}

TEST_CASE("deep network derivatives agree with finite differences") {
  struct Case {
    MultiIndex alpha;
    double step;
    double tol;
  };
  const std::vector<Case> cases = {{{1, 0}, 1e-5, 1e-7}, {{0, 1}, 1e-5, 1e-7}, {{2, 0}, 1e-4, 1e-5},
                                   {{1, 1}, 1e-4, 1e-5}, {{3, 0}, 1e-3, 1e-4}, {{0, 4}, 1e-2, 1e-3},
                                   {{2, 2}, 1e-2, 1e-3}};
  for (auto a : {Activation::Sin, Activation::Tanh}) {
    auto net = Network::initialize({2, 1, 3, 12, a}, 4);
    auto pts = random_points(2, 30, 8);
    for (const auto& c : cases) {
      auto ad = net.input_derivative(pts, {c.alpha, 0});
      auto fd = central_difference(net, pts, {c.alpha, 0}, c.step);
      CAPTURE(to_string(c.alpha));
      CHECK(scaled_relative_error(ad, fd) < c.tol);
    }
  }
}

TEST_CASE("relu first derivatives away from kinks and rejection of higher orders") {
  auto net = Network::initialize({2, 1, 2, 10, Activation::ReLU}, 2);
  auto pts = random_points(2, 40, 1);
  auto ad = net.input_derivative(pts, {{1, 0}, 0});
  const double h = 1e-6;
  auto fd = central_difference(net, pts, {{1, 0}, 0}, h);
  // Points whose stencil straddles a kink show a one-sided slope mix; there should be few or none.
  int agree = 0;
  for (Eigen::Index c = 0; c < pts.cols(); ++c) agree += std::abs(ad[c] - fd[c]) < 1e-6 * (1 + std::abs(ad[c]));
  CHECK(agree >= 38);
  CHECK_THROWS_AS(net.input_derivative(pts, {{2, 0}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(net.input_derivative(pts, {{1, 1}, 0}), std::invalid_argument);
}

TEST_CASE("requests above order four or with bad shapes are rejected") {
  auto net = Network::initialize({2, 1, 1, 4, Activation::Tanh}, 0);
  auto pts = random_points(2, 3, 0);
  CHECK_THROWS_AS(net.input_derivative(pts, {{5, 0}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(net.input_derivative(pts, {{1}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(net.input_derivative(pts, {{1, 0}, 1}), std::invalid_argument);
  CHECK_THROWS_AS(net.forward(random_points(3, 2, 0)), std::invalid_argument);
}

TEST_CASE("jet plan is downward closed") {
  std::vector<MultiIndex> req = {{0, 4}, {2, 0}};
  JetPlan plan(2, req);
  CHECK(plan.size() == 1 + 4 + 2);
  CHECK(plan.index_of({0, 0}) == 0);
  CHECK(plan.max_order() == 4);
  CHECK_THROWS_AS(plan.index_of({1, 1}), std::out_of_range);
  JetPlan mixed(2, std::vector<MultiIndex>{{2, 2}});
  CHECK(mixed.size() == 9);
}

TEST_CASE("parameter gradient through derivative terms matches finite differences") {
  for (auto a : {Activation::Sin, Activation::Tanh}) {
    auto net = Network::initialize({2, 2, 2, 6, a}, 21);
    std::vector<LossTerm> terms;
    terms.push_back(derivative_square_term(random_points(2, 17, 2), {{0, 0}, {1, 0}, {0, 2}}));
    terms.push_back(derivative_square_term(random_points(2, 9, 3), {{0, 4}, {1, 1}}));
    auto g = loss_gradient(net, terms, 5);
    auto fd = parameter_difference(net, terms, 1e-6);
    CHECK(scaled_relative_error(g.gradient, fd) < 1e-5);
    CHECK(g.value == doctest::Approx(loss_value(net, terms, 1000)).epsilon(1e-12));
    auto parts = term_values(net, terms);
    CHECK(parts.size() == 2);
    CHECK(parts[0] + parts[1] == doctest::Approx(g.value).epsilon(1e-12));
  }
}

TEST_CASE("relu gradient with a value-only loss matches finite differences") {
  auto net = Network::initialize({2, 1, 2, 8, Activation::ReLU}, 5);
  std::vector<LossTerm> terms;
  terms.push_back(derivative_square_term(random_points(2, 30, 6), {{0, 0}, {1, 0}}));
  auto g = loss_gradient(net, terms);
  auto fd = parameter_difference(net, terms, 1e-7);
  CHECK(scaled_relative_error(g.gradient, fd) < 1e-4);
}

TEST_CASE("chunking does not change values or gradients beyond rounding") {
  auto net = Network::initialize({2, 1, 2, 9, Activation::Tanh}, 3);
  std::vector<LossTerm> terms;
  terms.push_back(derivative_square_term(random_points(2, 101, 4), {{2, 0}, {0, 1}}));
  auto a = loss_gradient(net, terms, 7);
  auto b = loss_gradient(net, terms, 512);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-13));
  CHECK((a.gradient - b.gradient).cwiseAbs().maxCoeff() < 1e-10 * (1 + b.gradient.cwiseAbs().maxCoeff()));
}

TEST_CASE("non-finite losses raise a training error") {
  auto net = Network::initialize({1, 1, 1, 2, Activation::Tanh}, 0);
  LossTerm t;
  t.sites.push_back({random_points(1, 4, 0), JetPlan::values(1)});
  t.kernel = [](std::span<const OutputJets>, std::size_t, std::size_t, std::span<Eigen::MatrixXd>) {
    return std::numeric_limits<double>::infinity();
  };
  std::vector<LossTerm> terms{t};
  CHECK_THROWS_AS(loss_value(net, terms), TrainingError);
}

TEST_CASE("first adam step moves each parameter by lr against the gradient sign") {
  auto net = Network::initialize({1, 1, 1, 3, Activation::Tanh}, 0);
  auto before = std::vector<double>(net.parameters().begin(), net.parameters().end());
  std::vector<double> g(before.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (i % 2 ? -1.0 : 1.0) * (0.5 + i);
  auto opt = AdamState::for_parameters(g.size(), 1e-3);
  adam_step(net, opt, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double want = before[i] - 1e-3 * g[i] / (std::abs(g[i]) + 1e-8);
    CHECK(net.parameters()[i] == doctest::Approx(want).epsilon(1e-14));
  }
  // Second step by the explicit recurrence.
  auto mid = std::vector<double>(net.parameters().begin(), net.parameters().end());
  std::vector<double> g2(g.size(), 0.25);
  adam_step(net, opt, g2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = 0.9 * 0.1 * g[i] + 0.1 * g2[i];
    const double v = 0.999 * 0.001 * g[i] * g[i] + 0.001 * g2[i] * g2[i];
    const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
    CHECK(net.parameters()[i] == doctest::Approx(mid[i] - 1e-3 * mh / (std::sqrt(vh) + 1e-8)).epsilon(1e-13));
  }
  std::vector<double> bad(g.size(), NAN);
  CHECK_THROWS_AS(adam_step(net, opt, bad), TrainingError);
  CHECK_THROWS_AS(adam_step(net, opt, std::vector<double>(2, 0.0)), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  auto net = Network::initialize({2, 3, 2, 5, Activation::Sin}, 77);
  auto opt = AdamState::for_parameters(net.parameters().size());
  std::vector<double> g(net.parameters().size(), 0.1);
  adam_step(net, opt, g);
  Checkpoint cp{net, opt};
  auto back = parse_checkpoint(serialize_checkpoint(cp));
  CHECK(back.network == net);
  REQUIRE(back.optimizer.has_value());
  CHECK(*back.optimizer == opt);
  auto path = std::filesystem::temp_directory_path() / "rulewise_unit_ckpt" / "a.ckpt";
  save_checkpoint({net, std::nullopt}, path);
  auto loaded = load_checkpoint(path);
  CHECK(loaded.network == net);
  CHECK_FALSE(loaded.optimizer.has_value());
  CHECK_THROWS_AS(parse_checkpoint("garbage\n"), DataError);
  auto text = serialize_checkpoint(cp);
  CHECK_THROWS_AS(parse_checkpoint(text.substr(0, text.size() / 2)), DataError);
}
