#pragma once

#include "rulewise/autodiff/jet.hpp"
#include "rulewise/autodiff/network.hpp"

#include <Eigen/Core>

#include <span>

namespace rulewise::ad {

/// Central-difference estimate of d^alpha output_k at each point, built as the
/// tensor product of the standard second-order central stencils per axis.
Eigen::VectorXd central_difference(const Network& net, const Points& points,
                                   const DerivativeRequest& request, double step);

/// Central differences of the loss with respect to every parameter.
Eigen::VectorXd parameter_difference(const Network& net, std::span<const LossTerm> terms,
                                     double step);

/// max_i |a_i - b_i| / max(|b_i|, rms(b)); zero when both are identically zero.
double scaled_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace rulewise::ad
