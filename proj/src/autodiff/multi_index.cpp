#include "rulewise/autodiff/multi_index.hpp"

#include <stdexcept>

namespace rulewise::ad {

unsigned total_order(const MultiIndex& alpha) {
  unsigned s = 0;
  for (auto a : alpha) s += a;
  return s;
}

double multi_factorial(const MultiIndex& alpha) {
  double f = 1.0;
  for (auto a : alpha) {
    for (unsigned k = 2; k <= a; ++k) f *= static_cast<double>(k);
  }
  return f;
}

bool dominated_by(const MultiIndex& beta, const MultiIndex& alpha) {
  if (beta.size() != alpha.size()) return false;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (beta[k] > alpha[k]) return false;
  }
  return true;
}

std::string to_string(const MultiIndex& alpha) {
  std::string s = "(";
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k > 0) s += ',';
    s += std::to_string(alpha[k]);
  }
  return s + ")";
}

void DerivativeRequest::validate(std::size_t input_dim, std::size_t output_dim) const {
  if (multi_index.size() != input_dim)
    throw std::invalid_argument("derivative multi-index has wrong length");
  if (output_index >= output_dim) throw std::invalid_argument("derivative output index out of range");
  if (total_order(multi_index) > kMaxDerivativeOrder)
    throw std::invalid_argument("derivative order " + std::to_string(total_order(multi_index)) +
                                " exceeds the supported maximum of 4");
}

}  // namespace rulewise::ad
