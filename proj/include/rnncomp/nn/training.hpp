#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rnncomp/nn/network.hpp"
#include "rnncomp/random.hpp"

namespace rnncomp::nn {

struct BatchGradients {
  Network gradient;                  // d(mean masked loss)/d(parameter), same shapes as the model
  LossTotals totals;                 // summed over the batch
  std::vector<Vector> final_states;  // per example, for carrying state across windows
};

// Reverse-mode gradients through time of the mean masked loss over the batch
// (weights summed across every example). Dropout masks are drawn from
// options.dropout_rng in example order.
BatchGradients bptt_gradients(const Network& net, std::span<const Example> batch, const ForwardOptions& options = {});

// Inverted dropout: 1/keep_prob with probability keep_prob, else 0.
Vector dropout_mask(std::size_t size, double keep_prob, Rng& rng);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
  std::uint64_t step = 0;
};

// Bias-corrected Adam. Moment buffers are allocated on the first call and
// must keep matching the parameter shapes afterwards.
void adam_update(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                 AdamState& state);
void adam_update(Network& net, const Network& grad, AdamState& state);

// Scales all gradients so their global L2 norm is at most max_norm; returns
// the norm before clipping.
double clip_global_norm(Network& grad, double max_norm);

enum class LrSchedule { Constant, Cosine };

struct TrainingConfig {
  double learning_rate = 1e-3;
  // Cosine holds learning_rate for the first `hold_fraction` of the epochs,
  // then anneals it towards 0 over the rest.
  LrSchedule schedule = LrSchedule::Constant;
  double hold_fraction = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double keep_prob = 0.5;
  std::size_t batch_size = 20;
  std::size_t epochs = 30;
  std::size_t bptt_window = 32;
  std::optional<double> clip_norm = 5.0;
  std::uint64_t seed = 1;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
  // Rate for a 1-based epoch under the schedule.
  double rate_at(std::size_t epoch) const;
};

struct StepReport {
  LossTotals totals;
  double gradient_norm = 0.0;
  std::vector<Vector> final_states;
};

// Single-writer training loop state: one model, its Adam moments, and the
// dropout stream.
class Trainer {
 public:
  Trainer(Network& net, const TrainingConfig& config);

  StepReport step(std::span<const Example> batch);

  const AdamState& adam() const noexcept { return adam_; }
  void set_learning_rate(double lr) noexcept { adam_.config.learning_rate = lr; }

 private:
  Network& net_;
  TrainingConfig config_;
  AdamState adam_;
  Rng dropout_rng_;
};

}  // namespace rnncomp::nn
