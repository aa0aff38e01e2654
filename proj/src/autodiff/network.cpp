#include "rulewise/autodiff/network.hpp"

#include "rulewise/autodiff/jet.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rulewise::ad {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Sin: return "sin";
    case Activation::Tanh: return "tanh";
    case Activation::ReLU: return "relu";
  }
  return "unknown";
}

Activation parse_activation(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "sin") return Activation::Sin;
  if (n == "tanh") return Activation::Tanh;
  if (n == "relu") return Activation::ReLU;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

unsigned max_smooth_order(Activation a) {
  return a == Activation::ReLU ? 1U : kMaxDerivativeOrder;
}

void NetworkSpec::validate() const {
  if (input_dim < 1 || output_dim < 1 || hidden_layers < 1 || hidden_width < 1)
    throw std::invalid_argument("network dimensions must all be at least 1");
}

std::size_t NetworkSpec::layer_inputs(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden_width;
}

std::size_t NetworkSpec::layer_outputs(std::size_t layer) const {
  return layer + 1 == layer_count() ? output_dim : hidden_width;
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) n += (layer_inputs(l) + 1) * layer_outputs(l);
  return n;
}

Network::Network(NetworkSpec spec, std::vector<double> parameters, std::uint64_t seed)
    : spec_(spec), params_(std::move(parameters)), seed_(seed) {
  spec_.validate();
  if (params_.size() != spec_.parameter_count())
    throw std::invalid_argument("parameter vector length does not match the network spec");
  std::size_t off = 0;
  for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
    offsets_.push_back(off);
    off += (spec_.layer_inputs(l) + 1) * spec_.layer_outputs(l);
  }
}

Network Network::initialize(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<double> p;
  p.reserve(spec.parameter_count());
  std::mt19937_64 gen(seed);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const auto fan_in = spec.layer_inputs(l);
    const auto fan_out = spec.layer_outputs(l);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < fan_in * fan_out; ++i) p.push_back(dist(gen));
    p.insert(p.end(), fan_out, 0.0);
  }
  return Network(spec, std::move(p), seed);
}

std::size_t Network::bias_offset(std::size_t layer) const {
  return offsets_[layer] + spec_.layer_inputs(layer) * spec_.layer_outputs(layer);
}

void check_points(const Points& points, std::size_t dim) {
  if (static_cast<std::size_t>(points.rows()) != dim)
    throw std::invalid_argument("points have " + std::to_string(points.rows()) +
                                " coordinates, network expects " + std::to_string(dim));
  if (!points.allFinite()) throw std::invalid_argument("non-finite input point");
}

Eigen::MatrixXd Network::forward(const Points& points) const {
  check_points(points, spec_.input_dim);
  const auto plan = JetPlan::values(spec_.input_dim);
  JetEvaluator eval(*this, plan);
  return eval.forward(points, false).coefficients;
}

Eigen::VectorXd Network::input_derivative(const Points& points,
                                          const DerivativeRequest& request) const {
  request.validate(spec_.input_dim, spec_.output_dim);
  check_points(points, spec_.input_dim);
  const MultiIndex alphas[] = {request.multi_index};
  const JetPlan plan(spec_.input_dim, alphas);
  plan.check_activation(spec_.activation);
  JetEvaluator eval(*this, plan);
  const auto& jets = eval.forward(points, false);
  const auto j = plan.index_of(request.multi_index);
  const auto n = points.cols();
  return jets.coefficients.row(static_cast<Eigen::Index>(request.output_index))
             .segment(static_cast<Eigen::Index>(j) * n, n)
             .transpose() *
         multi_factorial(request.multi_index);
}

}  // namespace rulewise::ad
