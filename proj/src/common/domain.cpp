#include "rulewise/common/domain.hpp"

#include <stdexcept>

namespace rulewise {

bool Box::contains(const Eigen::Ref<const Eigen::VectorXd>& p, double tol) const {
  if (static_cast<std::size_t>(p.size()) != axes.size()) return false;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (!axes[k].contains(p[static_cast<Eigen::Index>(k)], tol)) return false;
  }
  return true;
}

void Box::validate() const {
  if (axes.empty()) throw std::invalid_argument("box has no axes");
  for (const auto& a : axes) {
    if (!(a.lo <= a.hi)) throw std::invalid_argument("empty interval in box");
  }
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = 0.5 * (lo + hi);
    return v;
  }
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  if (count > 1) v.back() = hi;
  return v;
}

Points tensor_grid(const Box& box, const std::vector<std::size_t>& shape) {
  if (shape.size() != box.dim()) throw std::invalid_argument("grid shape does not match box");
  std::size_t total = 1;
  std::vector<std::vector<double>> ticks;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (shape[k] == 0) throw std::invalid_argument("grid axis with zero points");
    total *= shape[k];
    ticks.push_back(linspace(box.axes[k].lo, box.axes[k].hi, shape[k]));
  }
  Points pts(static_cast<Eigen::Index>(shape.size()), static_cast<Eigen::Index>(total));
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t col = 0; col < total; ++col) {
    for (std::size_t k = 0; k < shape.size(); ++k) {
      pts(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(col)) = ticks[k][idx[k]];
    }
    for (std::size_t k = 0; k < shape.size(); ++k) {
      if (++idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
  return pts;
}

}  // namespace rulewise
