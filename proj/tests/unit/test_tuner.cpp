#include <doctest.h>

#include "rulewise/common/error.hpp"
#include "rulewise/tuner/tuner.hpp"

#include <cmath>
#include <limits>

using namespace rulewise;
using namespace rulewise::tuner;

namespace {

// Validation loss is a convex bowl in log-weights with its minimum at `target`;
// importance points downhill, as a well-behaved sweep would.
class BowlOracle : public TuneOracle {
 public:
  explicit BowlOracle(std::vector<double> target) : target_(std::move(target)) {}

  double f(const std::vector<double>& w) const {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = std::log(std::max(w[i], 1e-300)) - std::log(target_[i]);
      s += d * d;
    }
    return s;
  }
  std::vector<double> importance(const std::vector<double>& w) override {
    std::vector<double> ri(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) ri[i] = std::log(target_[i]) - std::log(w[i]);
    return ri;
  }
  double validation_loss(const std::vector<double>& w) override {
    ++loss_calls;
    if (loss_calls == fail_on) throw TrainingError("diverged");
    return f(w);
  }

  int loss_calls = 0;
  int fail_on = 0;  // 1-based call that diverges; 0 never

 private:
  std::vector<double> target_;
};

class ZeroOracle : public TuneOracle {
 public:
  std::vector<double> importance(const std::vector<double>& w) override { return std::vector<double>(w.size(), 0.0); }
  double validation_loss(const std::vector<double>&) override {
    ++calls;
    return 1.0;
  }
  int calls = 0;
};

}  // namespace

TEST_CASE("proposal rule") {
  const std::vector<double> w = {1.0, 2.0, 0.4, 1.0};
  const auto p = propose_weights(w, {0.5, -0.5, 0.05, -0.2}, 0.5, 0.1);
  CHECK(p == std::vector<double>{1.5, 1.0, 0.4, 0.5});
  CHECK(propose_weights({1.0}, {-3.0}, 2.0, 0.1) == std::vector<double>{0.0});
  CHECK_THROWS(propose_weights({1.0}, {}, 0.5, 0.1));
}

TEST_CASE("convex surrogate: accepted iterations decrease the loss") {
  BowlOracle bowl({3.0, 0.2, 1.0});
  TuneOptions opt;
  opt.max_iters = 40;
  const auto st = tune_weights(bowl, {1.0, 1.0, 1.0}, opt);
  double last = std::numeric_limits<double>::infinity();
  std::size_t accepted = 0;
  for (const auto& h : st.history) {
    for (double w : h.weights) CHECK(w >= 0.0);
    if (!h.accepted) continue;
    CHECK(bowl.f(h.weights) < last);
    last = bowl.f(h.weights);
    ++accepted;
  }
  CHECK(accepted > 3);
  CHECK(st.best_validation_loss == doctest::Approx(bowl.f(st.weights)));
  CHECK(st.best_validation_loss < 0.1 * bowl.f({1.0, 1.0, 1.0}));
  // Reverted steps halve the step size.
  for (std::size_t k = 1; k + 1 < st.history.size(); ++k) {
    const auto& h = st.history[k];
    CHECK(st.history[k + 1].step == doctest::Approx(h.accepted ? h.step : h.step / 2));
  }
  const auto csv = st.trajectory_csv();
  CHECK(csv.rfind("iteration,lambda_1,lambda_2,lambda_3,validation_loss,accepted,step\n", 0) == 0);
}

TEST_CASE("zero importance stops after one probe") {
  ZeroOracle z;
  const auto st = tune_weights(z, {1.0, 1.0}, {});
  CHECK(st.weights == std::vector<double>{1.0, 1.0});
  CHECK(st.history.size() == 2);
  CHECK_FALSE(st.history.back().accepted);
  CHECK(z.calls == 1);
}

TEST_CASE("an infinite dead zone leaves the weights alone") {
  BowlOracle bowl({3.0, 0.2});
  TuneOptions opt;
  opt.threshold = std::numeric_limits<double>::infinity();
  CHECK(tune_weights(bowl, {1.0, 1.0}, opt).weights == std::vector<double>{1.0, 1.0});
}

TEST_CASE("divergence reverts and halves") {
  BowlOracle bowl({3.0});
  bowl.fail_on = 2;
  TuneOptions opt;
  opt.max_iters = 1;
  const auto st = tune_weights(bowl, {1.0}, opt);
  CHECK_FALSE(st.history.back().accepted);
  CHECK(std::isinf(st.history.back().validation_loss));
  CHECK(st.weights == std::vector<double>{1.0});
  CHECK(st.step == 0.25);
}

TEST_CASE("tuning stops once the step is small") {
  BowlOracle bowl({1.0 + 1e-9});
  TuneOptions opt;
  opt.max_iters = 1000;
  opt.threshold = 0.0;
  const auto st = tune_weights(bowl, {1.0}, opt);
  CHECK(st.step < opt.min_step);
  CHECK(st.iteration < 20);
}

TEST_CASE("tuning input checks") {
  ZeroOracle z;
  TuneOptions opt;
  opt.max_iters = 0;
  CHECK_THROWS_AS(tune_weights(z, {1.0}, opt), ConfigError);
  CHECK_THROWS_AS(tune_weights(z, {-1.0}, {}), ConfigError);
}
