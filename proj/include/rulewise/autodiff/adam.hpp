#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rulewise::ad {

class Network;

struct AdamState {
  std::size_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;

  static AdamState for_parameters(std::size_t count, double lr = 1e-3);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update of `net` in place. Throws std::invalid_argument
/// on a length mismatch and TrainingError on non-finite gradient entries.
void adam_step(Network& net, AdamState& opt, std::span<const double> gradient);

}  // namespace rulewise::ad
