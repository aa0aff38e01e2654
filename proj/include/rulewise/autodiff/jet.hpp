#pragma once

#include "rulewise/autodiff/multi_index.hpp"
#include "rulewise/autodiff/network.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rulewise::ad {

/// The set of Taylor coefficients carried through the network: the smallest
/// downward-closed set of multi-indices containing every request. Index 0 is
/// always the zero multi-index (the plain value).
class JetPlan {
 public:
  /// Pairs (lhs, rhs) of non-zero indices whose sum is `out`.
  struct Product {
    std::uint16_t out;
    std::uint16_t lhs;
    std::uint16_t rhs;
  };

  JetPlan(std::size_t input_dim, std::span<const MultiIndex> requests);
  /// Value-only plan.
  static JetPlan values(std::size_t input_dim);

  [[nodiscard]] std::size_t input_dim() const { return input_dim_; }
  [[nodiscard]] std::size_t size() const { return indices_.size(); }
  [[nodiscard]] unsigned max_order() const { return max_order_; }
  [[nodiscard]] const std::vector<MultiIndex>& indices() const { return indices_; }
  [[nodiscard]] const std::vector<Product>& products() const { return products_; }
  /// Throws std::out_of_range when alpha is not carried.
  [[nodiscard]] std::size_t index_of(const MultiIndex& alpha) const;
  /// Index of the unit multi-index e_k, or size() when absent.
  [[nodiscard]] std::size_t unit_index(std::size_t axis) const { return unit_[axis]; }

  /// Throws std::invalid_argument when the activation is not smooth enough.
  void check_activation(Activation a) const;

 private:
  std::size_t input_dim_;
  unsigned max_order_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<Product> products_;
  std::vector<std::size_t> unit_;
};

/// Output Taylor coefficients for a batch of n points: an output_dim x (size * n)
/// matrix whose column block j holds coefficient j of every point.
struct OutputJets {
  Eigen::MatrixXd coefficients;
  std::size_t points = 0;
  std::size_t plan_size = 0;

  /// Taylor coefficient j of output k at point p. Multiply by alpha! for the derivative.
  [[nodiscard]] double coefficient(std::size_t k, std::size_t j, std::size_t p) const {
    return coefficients(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j * points + p));
  }
};

/// Forward Taylor propagation with an optional tape for the reverse pass.
class JetEvaluator {
 public:
  JetEvaluator(const Network& net, const JetPlan& plan);

  const OutputJets& forward(const Points& points, bool record);

  /// Accumulates d(loss)/d(parameters) into `gradient`, given d(loss)/d(coefficients)
  /// with the same layout as OutputJets::coefficients. Requires forward(.., true).
  void backward(const Eigen::MatrixXd& output_adjoint, std::span<double> gradient);

 private:
  struct HiddenTape {
    Eigen::MatrixXd pre;                   // width x (size*n)
    std::vector<Eigen::ArrayXXd> derivs;   // f^(k)(z0), k = 0..K+1, each width x n
    std::vector<Eigen::MatrixXd> powers;   // delta^k, k = 1..K, each width x (size*n)
  };

  void activate(HiddenTape& tape, Eigen::MatrixXd& out, std::size_t n) const;
  void activation_adjoint(const HiddenTape& tape, const Eigen::MatrixXd& d_out,
                          Eigen::MatrixXd& d_pre, std::size_t n) const;

  const Network& net_;
  const JetPlan& plan_;
  std::vector<Eigen::MatrixXd> inputs_;  // input of each affine layer
  std::vector<HiddenTape> hidden_;
  OutputJets output_;
  bool recorded_ = false;
};

/// One additive piece of a loss: a set of evaluation sites sharing the same
/// number of points, and a kernel that reads the sites' output jets for a chunk
/// of points and returns the summed loss over that chunk.
struct LossTerm {
  struct Site {
    Points points;
    JetPlan plan;
  };
  /// Arguments: output jets per site for points [begin, end); adjoint buffers per
  /// site to fill (already sized and zeroed). Returns the unscaled chunk sum.
  using Kernel = std::function<double(std::span<const OutputJets> jets, std::size_t begin,
                                      std::size_t end, std::span<Eigen::MatrixXd> adjoints)>;

  std::vector<Site> sites;
  Kernel kernel;
  double scale = 1.0;

  [[nodiscard]] std::size_t points() const;
};

struct ValueAndGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

inline constexpr std::size_t kDefaultChunk = 512;

/// Sum over terms of scale * kernel; throws TrainingError when non-finite.
double loss_value(const Network& net, std::span<const LossTerm> terms,
                  std::size_t chunk = kDefaultChunk);

/// Value and parameter gradient by reverse accumulation through the Taylor
/// propagation. Throws TrainingError when the loss or gradient is non-finite.
ValueAndGradient loss_gradient(const Network& net, std::span<const LossTerm> terms,
                               std::size_t chunk = kDefaultChunk);

/// Per-term values, in order.
std::vector<double> term_values(const Network& net, std::span<const LossTerm> terms,
                                std::size_t chunk = kDefaultChunk);

}  // namespace rulewise::ad
