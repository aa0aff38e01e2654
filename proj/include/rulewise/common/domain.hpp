#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

namespace rulewise {

/// Points are stored column-wise: one column per sample, one row per input.
using Points = Eigen::MatrixXd;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] double width() const { return hi - lo; }
  [[nodiscard]] bool contains(double v, double tol = 0.0) const {
    return v >= lo - tol && v <= hi + tol;
  }
};

/// Axis-aligned box. Every problem domain and collocation region is one.
struct Box {
  std::vector<Interval> axes;

  [[nodiscard]] std::size_t dim() const { return axes.size(); }
  [[nodiscard]] bool contains(const Eigen::Ref<const Eigen::VectorXd>& p,
                              double tol = 1e-12) const;
  void validate() const;
};

/// Evenly spaced values including both endpoints; a single value sits at the midpoint.
std::vector<double> linspace(double lo, double hi, std::size_t count);

/// Tensor grid over `box` with `shape[k]` points along axis k. The first axis varies fastest.
Points tensor_grid(const Box& box, const std::vector<std::size_t>& shape);

}  // namespace rulewise
