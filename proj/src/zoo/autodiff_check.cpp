#include "rulewise/zoo/autodiff_check.hpp"

#include "rulewise/autodiff/finite_difference.hpp"
#include "rulewise/rules/composite_loss.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace rulewise::zoo {

namespace {

Points sample(const rules::Region& region, std::size_t n, std::mt19937_64& gen) {
  Points p(region.box.dim(), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < region.box.dim(); ++a) {
    std::uniform_real_distribution<double> u(region.box.axes[a].lo, region.box.axes[a].hi);
    for (std::size_t c = 0; c < n; ++c) p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = u(gen);
  }
  if (region.face_axis) p.row(static_cast<Eigen::Index>(*region.face_axis)).setConstant(region.face_value);
  return p;
}

std::vector<ad::MultiIndex> indices_up_to(std::size_t dim, unsigned max_order) {
  std::vector<ad::MultiIndex> out;
  ad::MultiIndex alpha(dim, 0);
  // Odometer over [0, max_order]^dim, keeping total orders 1..max_order.
  while (true) {
    const auto k = ad::total_order(alpha);
    if (k >= 1 && k <= max_order) out.push_back(alpha);
    std::size_t a = 0;
    while (a < dim && ++alpha[a] > max_order) alpha[a++] = 0;
    if (a == dim) break;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& x, const auto& y) { return ad::total_order(x) < ad::total_order(y); });
  return out;
}

double step_for(unsigned order) {
  static constexpr double steps[] = {0.0, 1e-5, 1e-4, 1e-3, 1e-2};
  return steps[order];
}

std::string describe(const ad::NetworkSpec& s) {
  return fmt::format("{}x{} {}", s.hidden_layers, s.hidden_width, ad::to_string(s.activation));
}

}  // namespace

std::vector<AutodiffCheck> validate_autodiff(const std::vector<ProblemId>& problems,
                                             const AutodiffCheckOptions& options) {
  std::vector<AutodiffCheck> out;
  for (auto id : problems) {
    const auto p = make_problem(id);
    std::mt19937_64 gen(options.seed + static_cast<std::uint64_t>(id));
    const auto net = ad::Network::initialize(p.default_net, options.seed);
    const auto pts = sample({p.domain, std::nullopt, 0.0}, options.points, gen);
    unsigned max_order = 1;
    for (std::size_t i = 0; i < p.rules.size(); ++i) max_order = std::max(max_order, p.rules.residual(i).max_order());
    max_order = std::min(max_order, ad::max_smooth_order(p.default_net.activation));
    const bool kinked = p.default_net.activation == ad::Activation::ReLU;

    for (std::size_t k = 0; k < p.output_names.size(); ++k) {
      for (const auto& alpha : indices_up_to(p.input_names.size(), max_order)) {
        const auto order = ad::total_order(alpha);
        const ad::DerivativeRequest req{alpha, k};
        Eigen::VectorXd exact = net.input_derivative(pts, req);
        Eigen::VectorXd fd = ad::central_difference(net, pts, req, step_for(order));
        AutodiffCheck c{p.name(), describe(p.default_net),
                        fmt::format("d^{} {}", ad::to_string(alpha), p.output_names[k]), order, 0.0,
                        order <= 2 ? 1e-4 : 1e-2, options.points, 0};
        if (kinked) {
          // A piecewise-linear function is differenced exactly unless the stencil
          // straddles a kink; halving the step exposes those points.
          const Eigen::VectorXd half = ad::central_difference(net, pts, req, step_for(order) / 2);
          std::vector<Eigen::Index> keep;
          for (Eigen::Index i = 0; i < fd.size(); ++i)
            if (std::abs(fd[i] - half[i]) <= 1e-9 * (1.0 + std::abs(fd[i]))) keep.push_back(i);
          c.skipped = static_cast<std::size_t>(fd.size()) - keep.size();
          exact = exact(keep).eval();
          fd = fd(keep).eval();
        }
        c.error = ad::scaled_relative_error(exact, fd);
        out.push_back(std::move(c));
      }
    }

    // Parameter gradient of the full rule loss on a narrower copy of the network.
    auto spec = p.default_net;
    spec.hidden_width = std::min(spec.hidden_width, options.gradient_width);
    const auto small = ad::Network::initialize(spec, options.seed + 1);
    std::vector<rules::CollocationSet> colloc;
    for (const auto& r : p.rules.rules())
      colloc.push_back({sample(r.region, options.points, gen), rules::Layout::FullGrid, {options.points}});
    Dataset no_data;
    no_data.input_names = p.input_names;
    no_data.output_names = p.output_names;
    no_data.inputs.resize(static_cast<Eigen::Index>(p.input_names.size()), 0);
    no_data.outputs.resize(static_cast<Eigen::Index>(p.output_names.size()), 0);
    no_data.clean_outputs = no_data.outputs;
    const rules::CompositeObjective objective(p.rules, rules::Coalition::full(p.rules.size()), colloc, no_data);
    const auto vg = objective.value_and_gradient(small);
    const auto fd = ad::parameter_difference(small, objective.terms(), 1e-6);
    out.push_back({p.name(), describe(spec), "parameter gradient", 0, ad::scaled_relative_error(vg.gradient, fd),
                   1e-4, options.points, 0});
  }
  return out;
}

}  // namespace rulewise::zoo
