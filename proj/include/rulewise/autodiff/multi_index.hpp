#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rulewise::ad {

/// Per-input derivative orders, e.g. {0, 4} for d^4/dy^4 on (x, y).
using MultiIndex = std::vector<unsigned>;

inline constexpr unsigned kMaxDerivativeOrder = 4;

unsigned total_order(const MultiIndex& alpha);

/// alpha! = prod_k alpha_k!, the factor between a Taylor coefficient and a derivative.
double multi_factorial(const MultiIndex& alpha);

/// beta <= alpha componentwise.
bool dominated_by(const MultiIndex& beta, const MultiIndex& alpha);

std::string to_string(const MultiIndex& alpha);

/// A derivative of one network output.
struct DerivativeRequest {
  MultiIndex multi_index;
  std::size_t output_index = 0;

  /// Throws std::invalid_argument unless the total order is at most 4.
  void validate(std::size_t input_dim, std::size_t output_dim) const;
};

}  // namespace rulewise::ad
