#include "rulewise/lab/training.hpp"

#include "rulewise/common/error.hpp"
#include "rulewise/rules/composite_loss.hpp"

#include <cmath>
#include <limits>

namespace rulewise::lab {

namespace {

bool same_double(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

double validation_loss(const ad::Network& net, const Dataset& validation) {
  return validation.empty() ? std::numeric_limits<double>::quiet_NaN() : rules::data_mse(net, validation);
}

void evaluate(const ad::Network& net, const JobInputs& in, CoalitionResult& r) {
  const Eigen::VectorXd ch = rules::channel_mse(net, *in.test);
  r.channel_mse.assign(ch.data(), ch.data() + ch.size());
  r.test_mse = ch.mean();
  r.validation_mse = validation_loss(net, *in.validation);
}

}  // namespace

void TrainProtocol::validate() const {
  if (pretrain_epochs_max == 0 || finetune_epochs_max == 0 || plateau_patience == 0)
    throw ConfigError("protocol epoch counts and patience must be positive");
  if (!(plateau_tol >= 0.0) || !(learning_rate > 0.0)) throw ConfigError("protocol tolerance and learning rate must be positive");
  if (seeds.empty()) throw ConfigError("protocol needs at least one seed");
}

bool PlateauMonitor::update(double loss) {
  if (loss < best_ * (1.0 - tol_) || (std::isinf(best_) && std::isfinite(loss))) {
    best_ = loss;
    since_ = 0;
    return false;
  }
  return ++since_ >= patience_;
}

bool operator==(const CoalitionResult& a, const CoalitionResult& b) {
  if (a.channel_mse.size() != b.channel_mse.size()) return false;
  for (std::size_t k = 0; k < a.channel_mse.size(); ++k)
    if (!same_double(a.channel_mse[k], b.channel_mse[k])) return false;
  return a.coalition == b.coalition && a.seed == b.seed && same_double(a.test_mse, b.test_mse) &&
         same_double(a.validation_mse, b.validation_mse) && a.epochs_run == b.epochs_run &&
         a.config_hash == b.config_hash && a.failed == b.failed &&
         same_double(a.pre_injection_data_loss, b.pre_injection_data_loss) &&
         same_double(a.injection_loss, b.injection_loss) && same_double(a.final_loss, b.final_loss);
}

Baseline pretrain_baseline(const ad::NetworkSpec& spec, const Dataset& train, const Dataset& validation,
                           const TrainProtocol& protocol, std::uint64_t seed) {
  protocol.validate();
  Baseline b{ad::Network::initialize(spec, seed),
             ad::AdamState::for_parameters(spec.parameter_count(), protocol.learning_rate), 0, 0.0};
  if (train.empty()) return b;
  std::vector<ad::LossTerm> terms{rules::data_term(train, 1.0 / static_cast<double>(train.outputs.size()))};
  PlateauMonitor monitor(protocol.plateau_patience, protocol.plateau_tol);
  for (std::size_t epoch = 0; epoch < protocol.pretrain_epochs_max; ++epoch) {
    ad::ValueAndGradient vg;
    try {
      vg = ad::loss_gradient(b.network, terms);
      ad::adam_step(b.network, b.optimizer, {vg.gradient.data(), static_cast<std::size_t>(vg.gradient.size())});
    } catch (const TrainingError& e) {
      throw TrainingError("baseline pre-training diverged at epoch " + std::to_string(epoch) + " (seed " +
                          std::to_string(seed) + "): " + e.what());
    }
    ++b.epochs;
    const double monitored = validation.empty() ? vg.value : rules::data_mse(b.network, validation);
    if (monitor.update(monitored)) break;
  }
  b.train_data_loss = rules::data_mse(b.network, train);
  return b;
}

CoalitionResult finetune_coalition(const Baseline& baseline, rules::Coalition coalition, const JobInputs& in,
                                   std::uint64_t seed) {
  CoalitionResult r;
  r.coalition = coalition;
  r.seed = seed;
  r.pre_injection_data_loss = rules::data_mse(baseline.network, *in.train);
  rules::CompositeObjective objective(*in.rules, coalition, *in.colloc, *in.train);
  if (coalition.empty() || objective.terms().empty()) {
    evaluate(baseline.network, in, r);
    r.injection_loss = r.final_loss = r.pre_injection_data_loss;
    return r;
  }
  ad::Network net = baseline.network;
  ad::Network last_good = net;
  ad::AdamState opt = baseline.optimizer;
  const auto& protocol = *in.protocol;
  opt.lr = protocol.learning_rate;
  PlateauMonitor monitor(protocol.plateau_patience, protocol.plateau_tol);
  double last_loss = std::numeric_limits<double>::quiet_NaN();
  try {
    for (std::size_t epoch = 0; epoch < protocol.finetune_epochs_max; ++epoch) {
      const auto vg = objective.value_and_gradient(net);
      if (epoch == 0) r.injection_loss = vg.value;
      last_good = net;
      last_loss = vg.value;
      ad::adam_step(net, opt, {vg.gradient.data(), static_cast<std::size_t>(vg.gradient.size())});
      ++r.epochs_run;
      const double monitored = in.validation->empty() ? vg.value : rules::data_mse(net, *in.validation);
      if (!std::isfinite(monitored)) throw TrainingError("monitored loss is not finite");
      if (monitor.update(monitored)) break;
    }
    r.final_loss = objective.value(net);
    last_good = net;
  } catch (const TrainingError&) {
    r.failed = true;
    r.final_loss = last_loss;
  }
  evaluate(last_good, in, r);
  if (!std::isfinite(r.test_mse)) r.failed = true;
  return r;
}

}  // namespace rulewise::lab
