#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "rnncomp/linear_map.hpp"
#include "rnncomp/nn/layers.hpp"
#include "rnncomp/random.hpp"

namespace rnncomp::nn {

enum class Readout { PerStep, MeanPool };
enum class LossKind { SoftmaxCrossEntropy, SigmoidCrossEntropy };

// One recurrent layer between an optional embedding and a dense output layer.
struct Network {
  std::optional<Embedding> embedding;
  std::variant<RnnLayer, MgruLayer> cell;
  DenseLayer output;
  Readout readout = Readout::PerStep;
  LossKind loss = LossKind::SoftmaxCrossEntropy;

  CellKind cell_kind() const noexcept;
  // Width of the vectors fed to the recurrent cell.
  std::size_t cell_input_dim() const;
  std::size_t hidden_dim() const;
  std::size_t output_dim() const noexcept { return output.w.rows(); }

  // The cell's combined forward / recurrent matrices and bias. For MGRU these
  // are the stacked input-unit-over-gate matrices.
  const Matrix& forward_weights() const;
  Matrix& forward_weights();
  const Matrix& recurrent_weights() const;
  Matrix& recurrent_weights();
  const Vector& cell_bias() const;
  Vector& cell_bias();
  Activation cell_activation() const;

  void validate() const;
};

struct NamedParam {
  std::string_view name;
  std::span<double> values;
};

struct NamedConstParam {
  std::string_view name;
  std::span<const double> values;
};

// Fixed order: embedding (if any), cell forward, cell recurrent, cell bias,
// output weight, output bias.
std::vector<NamedParam> parameters(Network& net);
std::vector<NamedConstParam> parameters(const Network& net);

// Same structure as `like`, every value zero.
Network zeros_like(const Network& like);

struct NetworkSpec {
  CellKind cell = CellKind::Rnn;
  std::size_t input_dim = 1;  // embedding dim when vocab_size is set
  std::size_t hidden = 1;
  std::size_t output_dim = 1;
  std::optional<std::size_t> vocab_size;
  Readout readout = Readout::PerStep;
  LossKind loss = LossKind::SoftmaxCrossEntropy;
  Activation cell_activation = Activation::Tanh;
  double recurrent_sigma_max = 0.9;
  double embedding_scale = 0.1;
};

// Forward weights uniform in +-1/sqrt(fan_in); recurrent weights likewise and
// then rescaled to the requested largest singular value; biases zero.
Network initialize(const NetworkSpec& spec, Rng& rng);

// Evaluation view of a recurrent cell whose matrices may be low-rank.
struct CellView {
  CellKind kind = CellKind::Rnn;
  Activation activation = Activation::Tanh;
  LinearMap forward;
  LinearMap recurrent;
  std::span<const double> bias;
  std::size_t hidden = 0;
};

struct NetworkView {
  const Embedding* embedding = nullptr;
  CellView cell;
  const DenseLayer* output = nullptr;
  Readout readout = Readout::PerStep;
  LossKind loss = LossKind::SoftmaxCrossEntropy;
};

NetworkView view(const Network& net);

// One training or evaluation sequence.
struct Example {
  std::vector<Vector> inputs;  // dense inputs per step (no embedding)
  std::vector<int> tokens;     // token ids per step (embedding networks)
  // Softmax targets: one per step for PerStep readout, exactly one for MeanPool.
  std::vector<int> labels;
  // Sigmoid targets per step (PerStep) or one vector (MeanPool).
  std::vector<Vector> targets;
  // Per-step loss weights for PerStep readout; empty means all ones.
  std::vector<double> mask;
  // Empty means the zero state.
  Vector initial_state;

  std::size_t length() const noexcept { return tokens.empty() ? inputs.size() : tokens.size(); }
};

struct SequenceTrace {
  std::vector<Vector> inputs;          // x(t) as seen by the cell
  std::vector<Vector> states;          // states[0] is the initial state
  std::vector<Vector> gates;           // MGRU a_c per step
  std::vector<Vector> candidates;      // MGRU a_i per step
  std::vector<Vector> readout_inputs;  // hidden values after dropout, fed to the output layer
  std::vector<Vector> dropout_masks;   // empty when dropout is off
  std::vector<Vector> logits;          // output pre-activations
  std::vector<Vector> outputs;         // output activations

  const Vector& final_state() const { return states.back(); }
};

struct ForwardOptions {
  // Inverted dropout on the hidden values feeding the output layer; the
  // recurrent path is never dropped.
  double keep_prob = 1.0;
  Rng* dropout_rng = nullptr;
};

SequenceTrace forward_sequence(const NetworkView& net, const Example& example, const ForwardOptions& options = {});

struct LossTotals {
  double loss = 0.0;    // sum of weighted per-position losses
  double weight = 0.0;  // sum of weights
  double mean() const noexcept { return weight > 0.0 ? loss / weight : 0.0; }
};

LossTotals example_loss(const NetworkView& net, const SequenceTrace& trace, const Example& example);

}  // namespace rnncomp::nn
