#include "rnncomp/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rnncomp/errors.hpp"
#include "rnncomp/nn/loss.hpp"
#include "rnncomp/svd.hpp"

namespace rnncomp::nn {

namespace {

template <class F>
decltype(auto) visit_cell(const Network& net, F&& f) {
  return std::visit(std::forward<F>(f), net.cell);
}

void fill_uniform(Matrix& m, double bound, Rng& rng) {
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

double step_weight(const Example& ex, std::size_t t) { return ex.mask.empty() ? 1.0 : ex.mask[t]; }

}  // namespace

CellKind Network::cell_kind() const noexcept {
  return std::holds_alternative<RnnLayer>(cell) ? CellKind::Rnn : CellKind::Mgru;
}

std::size_t Network::cell_input_dim() const {
  return visit_cell(*this, [](const auto& c) { return c.input_dim(); });
}

std::size_t Network::hidden_dim() const {
  return visit_cell(*this, [](const auto& c) { return c.hidden_dim(); });
}

const Matrix& Network::forward_weights() const {
  if (const auto* r = std::get_if<RnnLayer>(&cell)) return r->w;
  return std::get<MgruLayer>(cell).wf;
}

Matrix& Network::forward_weights() {
  if (auto* r = std::get_if<RnnLayer>(&cell)) return r->w;
  return std::get<MgruLayer>(cell).wf;
}

const Matrix& Network::recurrent_weights() const {
  return visit_cell(*this, [](const auto& c) -> const Matrix& { return c.wr; });
}

Matrix& Network::recurrent_weights() {
  return std::visit([](auto& c) -> Matrix& { return c.wr; }, cell);
}

const Vector& Network::cell_bias() const {
  return visit_cell(*this, [](const auto& c) -> const Vector& { return c.bias; });
}

Vector& Network::cell_bias() {
  return std::visit([](auto& c) -> Vector& { return c.bias; }, cell);
}

Activation Network::cell_activation() const {
  if (const auto* r = std::get_if<RnnLayer>(&cell)) return r->activation;
  return std::get<MgruLayer>(cell).input_activation;
}

void Network::validate() const {
  visit_cell(*this, [](const auto& c) { c.validate(); });
  output.validate();
  if (output.w.cols() != hidden_dim()) throw DomainError("Network: output layer width must equal hidden size");
  if (embedding && embedding->dim() != cell_input_dim()) {
    throw DomainError("Network: embedding dim must equal cell input size");
  }
  const Activation expected =
      loss == LossKind::SoftmaxCrossEntropy ? Activation::Identity : Activation::Sigmoid;
  if (output.activation != expected) throw DomainError("Network: output activation does not match loss");
}

std::vector<NamedParam> parameters(Network& net) {
  std::vector<NamedParam> out;
  if (net.embedding) out.push_back({"embedding", net.embedding->table.values()});
  out.push_back({"cell.forward", net.forward_weights().values()});
  out.push_back({"cell.recurrent", net.recurrent_weights().values()});
  out.push_back({"cell.bias", net.cell_bias()});
  out.push_back({"output.weight", net.output.w.values()});
  out.push_back({"output.bias", net.output.bias});
  return out;
}

std::vector<NamedConstParam> parameters(const Network& net) {
  std::vector<NamedConstParam> out;
  for (const auto& p : parameters(const_cast<Network&>(net))) out.push_back({p.name, p.values});
  return out;
}

Network zeros_like(const Network& like) {
  Network z = like;
  for (auto& p : parameters(z)) std::fill(p.values.begin(), p.values.end(), 0.0);
  return z;
}

Network initialize(const NetworkSpec& spec, Rng& rng) {
  if (spec.hidden == 0 || spec.input_dim == 0 || spec.output_dim == 0) {
    throw DomainError("initialize: dimensions must be positive");
  }
  const std::size_t gates = spec.cell == CellKind::Mgru ? 2 : 1;
  const std::size_t h = spec.hidden;

  Network net;
  net.readout = spec.readout;
  net.loss = spec.loss;
  if (spec.vocab_size) {
    Embedding emb{Matrix(*spec.vocab_size, spec.input_dim)};
    fill_uniform(emb.table, spec.embedding_scale, rng);
    net.embedding = std::move(emb);
  }

  Matrix wf(gates * h, spec.input_dim);
  fill_uniform(wf, 1.0 / std::sqrt(static_cast<double>(spec.input_dim)), rng);
  Matrix wr(gates * h, h);
  fill_uniform(wr, 1.0 / std::sqrt(static_cast<double>(h)), rng);
  if (spec.recurrent_sigma_max > 0.0) {
    const double top = svd(wr).sigma.front();
    if (top > 0.0) wr = (spec.recurrent_sigma_max / top) * wr;
  }
  Vector bias(gates * h, 0.0);
  if (spec.cell == CellKind::Rnn) {
    net.cell = RnnLayer{std::move(wf), std::move(wr), std::move(bias), spec.cell_activation};
  } else {
    net.cell = MgruLayer{std::move(wf), std::move(wr), std::move(bias), spec.cell_activation};
  }

  net.output.w = Matrix(spec.output_dim, h);
  fill_uniform(net.output.w, 1.0 / std::sqrt(static_cast<double>(h)), rng);
  net.output.bias = Vector(spec.output_dim, 0.0);
  net.output.activation =
      spec.loss == LossKind::SoftmaxCrossEntropy ? Activation::Identity : Activation::Sigmoid;
  net.validate();
  return net;
}

NetworkView view(const Network& net) {
  NetworkView v;
  v.embedding = net.embedding ? &*net.embedding : nullptr;
  v.cell.kind = net.cell_kind();
  v.cell.activation = net.cell_activation();
  v.cell.forward = LinearMap::dense(net.forward_weights());
  v.cell.recurrent = LinearMap::dense(net.recurrent_weights());
  v.cell.bias = net.cell_bias();
  v.cell.hidden = net.hidden_dim();
  v.output = &net.output;
  v.readout = net.readout;
  v.loss = net.loss;
  return v;
}

SequenceTrace forward_sequence(const NetworkView& net, const Example& example, const ForwardOptions& options) {
  const CellView& cell = net.cell;
  const std::size_t h = cell.hidden;
  const std::size_t steps = example.length();
  const std::size_t gates = cell.kind == CellKind::Mgru ? 2 : 1;
  if (steps == 0) throw DomainError("forward_sequence: empty sequence");
  if (cell.recurrent.cols() != h || cell.recurrent.rows() != gates * h || cell.forward.rows() != gates * h) {
    throw DomainError("forward_sequence: cell shape mismatch");
  }
  if (net.embedding == nullptr && !example.tokens.empty()) {
    throw DomainError("forward_sequence: token input given to a network without an embedding");
  }
  if (net.embedding != nullptr && example.tokens.empty()) {
    throw DomainError("forward_sequence: embedding network needs token input");
  }
  const bool dropout = options.keep_prob < 1.0 && options.dropout_rng != nullptr;

  SequenceTrace trace;
  trace.inputs.reserve(steps);
  trace.states.reserve(steps + 1);
  if (example.initial_state.empty()) {
    trace.states.emplace_back(h, 0.0);
  } else {
    if (example.initial_state.size() != h) throw DomainError("forward_sequence: initial state length mismatch");
    trace.states.push_back(example.initial_state);
  }

  Vector scratch(std::max(cell.forward.rank(), cell.recurrent.rank()));
  const DenseLayer& out = *net.output;
  auto emit = [&](const Vector& hidden) {
    Vector r = hidden;
    if (dropout) {
      Vector mask(h);
      for (double& m : mask) m = options.dropout_rng->bernoulli(options.keep_prob) ? 1.0 / options.keep_prob : 0.0;
      for (std::size_t j = 0; j < h; ++j) r[j] *= mask[j];
      trace.dropout_masks.push_back(std::move(mask));
    }
    Vector z = out.bias;
    matvec_add(out.w, r, z);
    Vector a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = activate(out.activation, z[i]);
    trace.readout_inputs.push_back(std::move(r));
    trace.logits.push_back(std::move(z));
    trace.outputs.push_back(std::move(a));
  };

  for (std::size_t t = 0; t < steps; ++t) {
    Vector x;
    if (net.embedding) {
      const int tok = example.tokens[t];
      if (tok < 0 || static_cast<std::size_t>(tok) >= net.embedding->vocab_size()) {
        throw DomainError("forward_sequence: token id " + std::to_string(tok) + " outside vocabulary");
      }
      const auto row = net.embedding->table.row(static_cast<std::size_t>(tok));
      x.assign(row.begin(), row.end());
    } else {
      x = example.inputs[t];
    }
    if (x.size() != cell.forward.cols()) throw DomainError("forward_sequence: input width mismatch");

    const Vector& prev = trace.states.back();
    Vector z(cell.bias.begin(), cell.bias.end());
    cell.forward.apply_add(x, z, scratch);
    cell.recurrent.apply_add(prev, z, scratch);

    Vector next(h);
    if (cell.kind == CellKind::Rnn) {
      for (std::size_t j = 0; j < h; ++j) next[j] = activate(cell.activation, z[j]);
    } else {
      Vector gate(h), cand(h);
      for (std::size_t j = 0; j < h; ++j) {
        cand[j] = activate(cell.activation, z[j]);
        gate[j] = activate(Activation::Sigmoid, z[h + j]);
        next[j] = gate[j] * cand[j] + (1.0 - gate[j]) * prev[j];
      }
      trace.gates.push_back(std::move(gate));
      trace.candidates.push_back(std::move(cand));
    }
    trace.inputs.push_back(std::move(x));
    trace.states.push_back(std::move(next));
    if (net.readout == Readout::PerStep) emit(trace.states.back());
  }
  if (net.readout == Readout::MeanPool) {
    emit(mean_pool(std::span<const Vector>(trace.states).subspan(1)));
  }
  return trace;
}

LossTotals example_loss(const NetworkView& net, const SequenceTrace& trace, const Example& example) {
  LossTotals totals;
  const std::size_t positions = trace.logits.size();
  for (std::size_t p = 0; p < positions; ++p) {
    const double w = net.readout == Readout::PerStep ? step_weight(example, p) : 1.0;
    if (w == 0.0) continue;
    double loss;
    if (net.loss == LossKind::SoftmaxCrossEntropy) {
      if (p >= example.labels.size()) throw DomainError("example_loss: missing label");
      loss = softmax_cross_entropy(trace.logits[p], example.labels[p]).loss;
    } else {
      if (p >= example.targets.size()) throw DomainError("example_loss: missing target");
      loss = sigmoid_cross_entropy(trace.logits[p], example.targets[p]).loss;
    }
    totals.loss += w * loss;
    totals.weight += w;
  }
  return totals;
}

}  // namespace rnncomp::nn
