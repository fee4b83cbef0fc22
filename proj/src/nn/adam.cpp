#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rnncomp/errors.hpp"
#include "rnncomp/nn/training.hpp"

namespace rnncomp::nn {

void adam_update(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                 AdamState& state) {
  if (params.size() != grads.size()) throw DomainError("adam_update: parameter/gradient count mismatch");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) throw DomainError("adam_update: state shape mismatch");

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    Vector& m = state.first_moment[k];
    Vector& v = state.second_moment[k];
    if (p.size() != g.size() || p.size() != m.size()) {
      throw DomainError("adam_update: tensor " + std::to_string(k) + " shape mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void adam_update(Network& net, const Network& grad, AdamState& state) {
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> grads;
  for (const auto& p : parameters(net)) params.push_back(p.values);
  for (const auto& g : parameters(grad)) grads.push_back(g.values);
  adam_update(params, grads, state);
}

double clip_global_norm(Network& grad, double max_norm) {
  double sum = 0.0;
  for (const auto& p : parameters(grad)) {
    for (double v : p.values) sum += v * v;
  }
  const double norm = std::sqrt(sum);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& p : parameters(grad)) {
      for (double& v : p.values) v *= scale;
    }
  }
  return norm;
}

void TrainingConfig::validate() const {
  auto fail = [](const char* what) { throw DomainError(std::string("TrainingConfig: ") + what); };
  if (!(learning_rate > 0.0)) fail("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must be in [0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) fail("keep probability must be in (0, 1]");
  if (batch_size == 0) fail("batch size must be positive");
  if (bptt_window == 0) fail("BPTT window must be positive");
  if (clip_norm && !(*clip_norm > 0.0)) fail("clip norm must be positive");
  if (!(hold_fraction >= 0.0 && hold_fraction < 1.0)) fail("hold fraction must be in [0, 1)");
}

double TrainingConfig::rate_at(std::size_t epoch) const {
  if (schedule == LrSchedule::Constant || epochs == 0) return learning_rate;
  const double hold = hold_fraction * static_cast<double>(epochs);
  const double done = static_cast<double>(epoch - 1);
  if (done < hold) return learning_rate;
  const double progress = (done - hold) / (static_cast<double>(epochs) - hold);
  return learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

Trainer::Trainer(Network& net, const TrainingConfig& config)
    : net_(net), config_(config), dropout_rng_(derive_seed(config.seed, "dropout")) {
  config_.validate();
  adam_.config = config_.adam();
}

StepReport Trainer::step(std::span<const Example> batch) {
  ForwardOptions options;
  if (config_.keep_prob < 1.0) {
    options.keep_prob = config_.keep_prob;
    options.dropout_rng = &dropout_rng_;
  }
  BatchGradients g = bptt_gradients(net_, batch, options);
  StepReport report;
  report.totals = g.totals;
  report.gradient_norm = config_.clip_norm ? clip_global_norm(g.gradient, *config_.clip_norm)
                                           : clip_global_norm(g.gradient, std::numeric_limits<double>::infinity());
  adam_update(net_, g.gradient, adam_);
  report.final_states = std::move(g.final_states);
  return report;
}

}  // namespace rnncomp::nn
