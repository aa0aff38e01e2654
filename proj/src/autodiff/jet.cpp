#include "rulewise/autodiff/jet.hpp"

#include "rulewise/common/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <stdexcept>

namespace rulewise::ad {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

constexpr std::array<double, 7> kFactorial{1, 1, 2, 6, 24, 120, 720};

// Coefficients (ascending powers of t) of the k-th derivative of tanh written
// as a polynomial in t = tanh(z): P_0 = t, P_{k+1} = P_k'(t) (1 - t^2).
const std::vector<std::vector<double>>& tanh_derivative_polys() {
  static const auto polys = [] {
    std::vector<std::vector<double>> p{{0.0, 1.0}};
    for (int k = 0; k < 6; ++k) {
      const auto& prev = p.back();
      std::vector<double> d(prev.size() > 1 ? prev.size() - 1 : 1, 0.0);
      for (std::size_t i = 1; i < prev.size(); ++i) d[i - 1] = static_cast<double>(i) * prev[i];
      std::vector<double> next(d.size() + 2, 0.0);
      for (std::size_t i = 0; i < d.size(); ++i) {
        next[i] += d[i];
        next[i + 2] -= d[i];
      }
      p.push_back(std::move(next));
    }
    return p;
  }();
  return polys;
}

// f^(k)(z) for k = 0..max_k, elementwise.
void activation_derivatives(Activation act, const Eigen::ArrayXXd& z, unsigned max_k,
                            std::vector<Eigen::ArrayXXd>& out) {
  out.resize(max_k + 1);
  switch (act) {
    case Activation::Sin: {
      const Eigen::ArrayXXd s = z.sin();
      const Eigen::ArrayXXd c = z.cos();
      for (unsigned k = 0; k <= max_k; ++k) {
        switch (k % 4) {
          case 0: out[k] = s; break;
          case 1: out[k] = c; break;
          case 2: out[k] = -s; break;
          default: out[k] = -c; break;
        }
      }
      break;
    }
    case Activation::Tanh: {
      const Eigen::ArrayXXd t = z.tanh();
      const auto& polys = tanh_derivative_polys();
      for (unsigned k = 0; k <= max_k; ++k) {
        const auto& p = polys[k];
        Eigen::ArrayXXd acc = Eigen::ArrayXXd::Constant(z.rows(), z.cols(), p.back());
        for (std::size_t i = p.size() - 1; i-- > 0;) acc = acc * t + p[i];
        out[k] = std::move(acc);
      }
      break;
    }
    case Activation::ReLU: {
      out[0] = z.max(0.0);
      if (max_k >= 1) out[1] = (z > 0.0).cast<double>();
      for (unsigned k = 2; k <= max_k; ++k) out[k] = Eigen::ArrayXXd::Zero(z.rows(), z.cols());
      break;
    }
  }
}

}  // namespace

JetPlan::JetPlan(std::size_t input_dim, std::span<const MultiIndex> requests)
    : input_dim_(input_dim) {
  if (input_dim == 0) throw std::invalid_argument("jet plan needs at least one input");
  std::set<MultiIndex> closure;
  closure.insert(MultiIndex(input_dim, 0));
  for (const auto& alpha : requests) {
    if (alpha.size() != input_dim) throw std::invalid_argument("multi-index has wrong length");
    if (total_order(alpha) > kMaxDerivativeOrder)
      throw std::invalid_argument("derivative order " + std::to_string(total_order(alpha)) +
                                  " exceeds the supported maximum of 4");
    // Every beta <= alpha.
    MultiIndex beta(input_dim, 0);
    while (true) {
      closure.insert(beta);
      std::size_t k = 0;
      while (k < input_dim && beta[k] == alpha[k]) beta[k++] = 0;
      if (k == input_dim) break;
      ++beta[k];
    }
  }
  indices_.assign(closure.begin(), closure.end());
  std::stable_sort(indices_.begin(), indices_.end(), [](const MultiIndex& a, const MultiIndex& b) {
    return total_order(a) < total_order(b);
  });
  for (const auto& a : indices_) max_order_ = std::max(max_order_, total_order(a));

  for (std::size_t g = 1; g < indices_.size(); ++g) {
    for (std::size_t a = 1; a < indices_.size(); ++a) {
      if (a == g || !dominated_by(indices_[a], indices_[g])) continue;
      MultiIndex rest(input_dim);
      for (std::size_t k = 0; k < input_dim; ++k) rest[k] = indices_[g][k] - indices_[a][k];
      products_.push_back({static_cast<std::uint16_t>(g), static_cast<std::uint16_t>(a),
                           static_cast<std::uint16_t>(index_of(rest))});
    }
  }
  unit_.assign(input_dim, indices_.size());
  for (std::size_t k = 0; k < input_dim; ++k) {
    MultiIndex e(input_dim, 0);
    e[k] = 1;
    auto it = std::find(indices_.begin(), indices_.end(), e);
    if (it != indices_.end()) unit_[k] = static_cast<std::size_t>(it - indices_.begin());
  }
}

JetPlan JetPlan::values(std::size_t input_dim) { return JetPlan(input_dim, {}); }

std::size_t JetPlan::index_of(const MultiIndex& alpha) const {
  auto it = std::find(indices_.begin(), indices_.end(), alpha);
  if (it == indices_.end()) throw std::out_of_range("multi-index " + to_string(alpha) + " not in jet plan");
  return static_cast<std::size_t>(it - indices_.begin());
}

void JetPlan::check_activation(Activation a) const {
  if (max_order_ > max_smooth_order(a))
    throw std::invalid_argument("input derivatives of order " + std::to_string(max_order_) +
                                " are not available for " + to_string(a) + " activations");
}

JetEvaluator::JetEvaluator(const Network& net, const JetPlan& plan) : net_(net), plan_(plan) {
  if (plan.input_dim() != net.spec().input_dim)
    throw std::invalid_argument("jet plan input dimension does not match the network");
  plan.check_activation(net.spec().activation);
}

void JetEvaluator::activate(HiddenTape& tape, Eigen::MatrixXd& out, std::size_t n) const {
  const auto K = plan_.max_order();
  const auto B = plan_.size();
  const auto N = static_cast<Eigen::Index>(n);
  const auto width = tape.pre.rows();
  const unsigned needed = recorded_ ? K + 1 : K;
  activation_derivatives(net_.spec().activation, tape.pre.leftCols(N).array(), needed, tape.derivs);

  out.resize(width, static_cast<Eigen::Index>(B) * N);
  out.leftCols(N) = tape.derivs[0].matrix();
  if (K == 0) return;

  const auto& idx = plan_.indices();
  auto block = [N](auto& m, std::size_t j) { return m.middleCols(static_cast<Eigen::Index>(j) * N, N); };

  // powers[k-1] holds delta^k; delta^1 is the pre-activation itself (block 0 is never read).
  tape.powers.resize(K);
  tape.powers[0] = tape.pre;
  for (unsigned k = 2; k <= K; ++k) {
    auto& dk = tape.powers[k - 1];
    dk.setZero(width, static_cast<Eigen::Index>(B) * N);
    const auto& prev = tape.powers[k - 2];
    for (const auto& pr : plan_.products()) {
      if (total_order(idx[pr.lhs]) < k - 1) continue;
      block(dk, pr.out).array() += block(prev, pr.lhs).array() * block(tape.pre, pr.rhs).array();
    }
  }
  for (std::size_t g = 1; g < B; ++g) {
    auto og = block(out, g);
    og.setZero();
    const auto order = total_order(idx[g]);
    for (unsigned k = 1; k <= std::min(K, order); ++k) {
      og.array() += (tape.derivs[k] / kFactorial[k]) * block(tape.powers[k - 1], g).array();
    }
  }
}

void JetEvaluator::activation_adjoint(const HiddenTape& tape, const Eigen::MatrixXd& d_out,
                                      Eigen::MatrixXd& d_pre, std::size_t n) const {
  const auto K = plan_.max_order();
  const auto B = plan_.size();
  const auto N = static_cast<Eigen::Index>(n);
  const auto width = d_out.rows();
  const auto& idx = plan_.indices();
  auto block = [N](auto& m, std::size_t j) { return m.middleCols(static_cast<Eigen::Index>(j) * N, N); };

  d_pre.setZero(width, static_cast<Eigen::Index>(B) * N);
  auto d0 = d_pre.leftCols(N).array();
  d0 = d_out.leftCols(N).array() * tape.derivs[1];
  if (K == 0) return;

  // Sensitivity of every coefficient to the expansion point z0.
  for (std::size_t g = 1; g < B; ++g) {
    const auto order = total_order(idx[g]);
    for (unsigned k = 1; k <= std::min(K, order); ++k) {
      d0 += block(d_out, g).array() * (tape.derivs[k + 1] / kFactorial[k]) *
            block(tape.powers[k - 1], g).array();
    }
  }

  // Adjoints of the powers delta^k, seeded by the Taylor combination.
  std::vector<Eigen::MatrixXd> g_pow(K);
  for (unsigned k = 1; k <= K; ++k) {
    auto& gk = g_pow[k - 1];
    gk.setZero(width, static_cast<Eigen::Index>(B) * N);
    for (std::size_t g = 1; g < B; ++g) {
      if (total_order(idx[g]) < k) continue;
      block(gk, g).array() = block(d_out, g).array() * (tape.derivs[k] / kFactorial[k]);
    }
  }
  for (unsigned k = K; k >= 2; --k) {
    const auto& gk = g_pow[k - 1];
    auto& g_prev = g_pow[k - 2];
    const auto& prev = tape.powers[k - 2];
    for (const auto& pr : plan_.products()) {
      if (total_order(idx[pr.lhs]) < k - 1) continue;
      const auto go = block(gk, pr.out).array();
      block(g_prev, pr.lhs).array() += go * block(tape.pre, pr.rhs).array();
      block(d_pre, pr.rhs).array() += go * block(prev, pr.lhs).array();
    }
  }
  for (std::size_t g = 1; g < B; ++g) block(d_pre, g) += block(g_pow[0], g);
}

const OutputJets& JetEvaluator::forward(const Points& points, bool record) {
  const auto& spec = net_.spec();
  const auto n = static_cast<std::size_t>(points.cols());
  const auto N = points.cols();
  const auto B = static_cast<Eigen::Index>(plan_.size());
  recorded_ = record;
  const auto params = net_.parameters();

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(points.rows(), B * N);
  x.leftCols(N) = points;
  for (std::size_t k = 0; k < spec.input_dim; ++k) {
    const auto u = plan_.unit_index(k);
    if (u < plan_.size()) x.block(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(u) * N, 1, N).setOnes();
  }

  const auto L = spec.layer_count();
  inputs_.resize(L);
  hidden_.resize(L - 1);
  Eigen::MatrixXd current = std::move(x);
  for (std::size_t l = 0; l < L; ++l) {
    const auto rows = static_cast<Eigen::Index>(spec.layer_outputs(l));
    const auto cols = static_cast<Eigen::Index>(spec.layer_inputs(l));
    RowMajorMap w(params.data() + net_.weight_offset(l), rows, cols);
    Eigen::Map<const Eigen::VectorXd> b(params.data() + net_.bias_offset(l), rows);
    Eigen::MatrixXd z(rows, B * N);
    z.noalias() = w * current;
    z.leftCols(N).colwise() += b;
    if (record) inputs_[l] = std::move(current);
    if (l + 1 == L) {
      output_.coefficients = std::move(z);
    } else {
      auto& tape = hidden_[l];
      tape.pre = std::move(z);
      Eigen::MatrixXd next;
      activate(tape, next, n);
      current = std::move(next);
    }
  }
  output_.points = n;
  output_.plan_size = plan_.size();
  return output_;
}

void JetEvaluator::backward(const Eigen::MatrixXd& output_adjoint, std::span<double> gradient) {
  if (!recorded_) throw std::logic_error("backward requires a recorded forward pass");
  const auto& spec = net_.spec();
  if (gradient.size() != spec.parameter_count()) throw std::invalid_argument("gradient length mismatch");
  const auto N = static_cast<Eigen::Index>(output_.points);
  const auto params = net_.parameters();
  Eigen::MatrixXd delta = output_adjoint;
  for (std::size_t l = spec.layer_count(); l-- > 0;) {
    const auto rows = static_cast<Eigen::Index>(spec.layer_outputs(l));
    const auto cols = static_cast<Eigen::Index>(spec.layer_inputs(l));
    RowMajorMutMap dw(gradient.data() + net_.weight_offset(l), rows, cols);
    Eigen::Map<Eigen::VectorXd> db(gradient.data() + net_.bias_offset(l), rows);
    dw.noalias() += delta * inputs_[l].transpose();
    db += delta.leftCols(N).rowwise().sum();
    if (l == 0) break;
    RowMajorMap w(params.data() + net_.weight_offset(l), rows, cols);
    Eigen::MatrixXd d_act(cols, delta.cols());
    d_act.noalias() = w.transpose() * delta;
    activation_adjoint(hidden_[l - 1], d_act, delta, output_.points);
  }
}

std::size_t LossTerm::points() const {
  return sites.empty() ? 0 : static_cast<std::size_t>(sites.front().points.cols());
}

namespace {

double run_terms(const Network& net, std::span<const LossTerm> terms, std::size_t chunk,
                 std::vector<double>* per_term, Eigen::VectorXd* gradient) {
  if (chunk == 0) throw std::invalid_argument("chunk size must be positive");
  const bool want_grad = gradient != nullptr;
  if (want_grad) gradient->setZero(static_cast<Eigen::Index>(net.spec().parameter_count()));
  double total = 0.0;
  for (const auto& term : terms) {
    const auto P = term.points();
    for (const auto& s : term.sites) {
      if (static_cast<std::size_t>(s.points.cols()) != P)
        throw std::invalid_argument("loss term sites disagree on point count");
      check_points(s.points, net.spec().input_dim);
    }
    std::vector<JetEvaluator> evals;
    evals.reserve(term.sites.size());
    for (const auto& s : term.sites) evals.emplace_back(net, s.plan);
    std::vector<OutputJets> jets(term.sites.size());
    std::vector<Eigen::MatrixXd> adjoints(term.sites.size());
    double term_sum = 0.0;
    for (std::size_t begin = 0; begin < P; begin += chunk) {
      const auto end = std::min(P, begin + chunk);
      const auto m = static_cast<Eigen::Index>(end - begin);
      for (std::size_t s = 0; s < term.sites.size(); ++s) {
        const Points sub = term.sites[s].points.middleCols(static_cast<Eigen::Index>(begin), m);
        jets[s] = evals[s].forward(sub, want_grad);
        adjoints[s].setZero(jets[s].coefficients.rows(), jets[s].coefficients.cols());
      }
      const double part = term.kernel(jets, begin, end, adjoints);
      term_sum += part;
      if (want_grad) {
        for (std::size_t s = 0; s < term.sites.size(); ++s) {
          adjoints[s] *= term.scale;
          evals[s].backward(adjoints[s], std::span<double>(gradient->data(), static_cast<std::size_t>(gradient->size())));
        }
      }
    }
    const double v = term.scale * term_sum;
    if (per_term != nullptr) per_term->push_back(v);
    total += v;
  }
  if (!std::isfinite(total)) throw TrainingError("loss is not finite");
  if (want_grad && !gradient->allFinite()) throw TrainingError("loss gradient is not finite");
  return total;
}

}  // namespace

double loss_value(const Network& net, std::span<const LossTerm> terms, std::size_t chunk) {
  return run_terms(net, terms, chunk, nullptr, nullptr);
}

ValueAndGradient loss_gradient(const Network& net, std::span<const LossTerm> terms, std::size_t chunk) {
  ValueAndGradient out;
  out.value = run_terms(net, terms, chunk, nullptr, &out.gradient);
  return out;
}

std::vector<double> term_values(const Network& net, std::span<const LossTerm> terms, std::size_t chunk) {
  std::vector<double> values;
  values.reserve(terms.size());
  run_terms(net, terms, chunk, &values, nullptr);
  return values;
}

}  // namespace rulewise::ad
