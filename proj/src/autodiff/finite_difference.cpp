#include "rulewise/autodiff/finite_difference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rulewise::ad {

namespace {

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;
};

// Second-order central stencils for derivative orders 0..4 (weights before dividing by h^k).
Stencil central_stencil(unsigned order) {
  switch (order) {
    case 0: return {{0}, {1.0}};
    case 1: return {{-1, 1}, {-0.5, 0.5}};
    case 2: return {{-1, 0, 1}, {1.0, -2.0, 1.0}};
    case 3: return {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}};
    case 4: return {{-2, -1, 0, 1, 2}, {1.0, -4.0, 6.0, -4.0, 1.0}};
    default: throw std::invalid_argument("finite-difference order above 4");
  }
}

}  // namespace

Eigen::VectorXd central_difference(const Network& net, const Points& points,
                                   const DerivativeRequest& request, double step) {
  request.validate(net.spec().input_dim, net.spec().output_dim);
  const auto dim = net.spec().input_dim;
  std::vector<Stencil> stencils;
  for (auto a : request.multi_index) stencils.push_back(central_stencil(a));

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(points.cols());
  std::vector<std::size_t> pos(dim, 0);
  while (true) {
    double w = 1.0;
    Points shifted = points;
    for (std::size_t k = 0; k < dim; ++k) {
      w *= stencils[k].weights[pos[k]];
      shifted.row(static_cast<Eigen::Index>(k)).array() += step * stencils[k].offsets[pos[k]];
    }
    acc += w * net.forward(shifted).row(static_cast<Eigen::Index>(request.output_index)).transpose();
    std::size_t k = 0;
    while (k < dim && ++pos[k] == stencils[k].offsets.size()) pos[k++] = 0;
    if (k == dim) break;
  }
  return acc / std::pow(step, static_cast<double>(total_order(request.multi_index)));
}

Eigen::VectorXd parameter_difference(const Network& net, std::span<const LossTerm> terms, double step) {
  Network probe = net;
  auto p = probe.parameters();
  Eigen::VectorXd g(static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + step;
    const double up = loss_value(probe, terms);
    p[i] = orig - step;
    const double down = loss_value(probe, terms);
    p[i] = orig;
    g[static_cast<Eigen::Index>(i)] = (up - down) / (2.0 * step);
  }
  return g;
}

double scaled_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("size mismatch");
  if (b.size() == 0) return 0.0;
  const double rms = std::sqrt(b.squaredNorm() / static_cast<double>(b.size()));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max(std::abs(b[i]), rms);
    const double diff = std::abs(a[i] - b[i]);
    if (denom == 0.0) {
      if (diff != 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, diff / denom);
  }
  return worst;
}

}  // namespace rulewise::ad
