#pragma once

#include "rulewise/zoo/problem.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rulewise::zoo {

struct AutodiffCheck {
  std::string problem;
  std::string architecture;
  std::string quantity;  // "d^alpha output" or "parameter gradient"
  unsigned order = 0;    // derivative order, 0 for parameter gradients
  double error = 0.0;    // scaled relative error against central differences
  double tolerance = 0.0;
  std::size_t points = 0;
  std::size_t skipped = 0;  // ReLU points whose stencil crosses a kink
  [[nodiscard]] bool passed() const { return error < tolerance; }
};

struct AutodiffCheckOptions {
  std::size_t points = 100;
  std::uint64_t seed = 0;
  /// Hidden width used for the parameter-gradient check, which differences every parameter.
  std::size_t gradient_width = 10;
};

/// Input derivatives of each problem's default network, every multi-index up to the
/// highest order its rules use, and the parameter gradient of its full rule loss,
/// all against central differences at random points of the domain. Tolerances are
/// 1e-4 for orders 1-2 and gradients, 1e-2 for orders 3-4.
std::vector<AutodiffCheck> validate_autodiff(const std::vector<ProblemId>& problems,
                                             const AutodiffCheckOptions& options);

}  // namespace rulewise::zoo
