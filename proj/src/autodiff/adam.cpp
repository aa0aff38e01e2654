#include "rulewise/autodiff/adam.hpp"

#include "rulewise/autodiff/network.hpp"
#include "rulewise/common/error.hpp"

#include <cmath>
#include <stdexcept>

namespace rulewise::ad {

AdamState AdamState::for_parameters(std::size_t count, double lr) {
  AdamState s;
  s.first_moment.assign(count, 0.0);
  s.second_moment.assign(count, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(Network& net, AdamState& opt, std::span<const double> gradient) {
  auto params = net.parameters();
  if (gradient.size() != params.size()) throw std::invalid_argument("gradient length does not match parameters");
  if (opt.first_moment.size() != params.size() || opt.second_moment.size() != params.size())
    throw std::invalid_argument("optimizer moments do not match parameters");
  for (double g : gradient) {
    if (!std::isfinite(g)) throw TrainingError("non-finite gradient entry");
  }
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const double bc1 = 1.0 - std::pow(opt.beta1, t);
  const double bc2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradient[i];
    opt.first_moment[i] = opt.beta1 * opt.first_moment[i] + (1.0 - opt.beta1) * g;
    opt.second_moment[i] = opt.beta2 * opt.second_moment[i] + (1.0 - opt.beta2) * g * g;
    const double m_hat = opt.first_moment[i] / bc1;
    const double v_hat = opt.second_moment[i] / bc2;
    params[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps_hat);
  }
}

}  // namespace rulewise::ad
