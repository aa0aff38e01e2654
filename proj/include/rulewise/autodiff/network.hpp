#pragma once

#include "rulewise/autodiff/multi_index.hpp"
#include "rulewise/common/domain.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rulewise::ad {

enum class Activation { Sin, Tanh, ReLU };

std::string to_string(Activation a);
/// Accepts "sin", "tanh", "relu" (case-insensitive).
Activation parse_activation(const std::string& name);

/// Highest input-derivative order an activation supports exactly.
unsigned max_smooth_order(Activation a);

struct NetworkSpec {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  std::size_t hidden_layers = 1;
  std::size_t hidden_width = 1;
  Activation activation = Activation::Tanh;

  void validate() const;
  [[nodiscard]] std::size_t parameter_count() const;
  /// Number of affine maps, i.e. hidden_layers + 1.
  [[nodiscard]] std::size_t layer_count() const { return hidden_layers + 1; }
  [[nodiscard]] std::size_t layer_inputs(std::size_t layer) const;
  [[nodiscard]] std::size_t layer_outputs(std::size_t layer) const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// A dense feed-forward network. Parameters are laid out per layer as the
/// row-major weight matrix (outputs x inputs) followed by the bias vector.
class Network {
 public:
  Network(NetworkSpec spec, std::vector<double> parameters, std::uint64_t seed);

  /// Glorot-uniform weights, zero biases, drawn from a generator seeded with `seed`.
  static Network initialize(const NetworkSpec& spec, std::uint64_t seed);

  [[nodiscard]] const NetworkSpec& spec() const { return spec_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::span<const double> parameters() const { return params_; }
  [[nodiscard]] std::span<double> parameters() { return params_; }

  /// Offset of layer `l`'s weights in the flat parameter vector; biases follow them.
  [[nodiscard]] std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  [[nodiscard]] std::size_t bias_offset(std::size_t layer) const;

  /// Outputs for each column of `points` (output_dim x n).
  [[nodiscard]] Eigen::MatrixXd forward(const Points& points) const;

  /// d^alpha output_k / dx^alpha at each column of `points`.
  [[nodiscard]] Eigen::VectorXd input_derivative(const Points& points,
                                                 const DerivativeRequest& request) const;

  friend bool operator==(const Network& a, const Network& b) {
    return a.spec_ == b.spec_ && a.params_ == b.params_ && a.seed_ == b.seed_;
  }

 private:
  NetworkSpec spec_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
  std::uint64_t seed_ = 0;
};

/// Throws std::invalid_argument unless points has `dim` rows and only finite entries.
void check_points(const Points& points, std::size_t dim);

}  // namespace rulewise::ad
