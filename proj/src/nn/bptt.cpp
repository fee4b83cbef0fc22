#include <cmath>

#include "rnncomp/errors.hpp"
#include "rnncomp/nn/loss.hpp"
#include "rnncomp/nn/training.hpp"

namespace rnncomp::nn {

namespace {

double batch_weight(const Network& net, std::span<const Example> batch) {
  double total = 0.0;
  for (const auto& ex : batch) {
    if (net.readout == Readout::MeanPool) {
      total += 1.0;
    } else if (ex.mask.empty()) {
      total += static_cast<double>(ex.length());
    } else {
      if (ex.mask.size() != ex.length()) throw DomainError("bptt_gradients: mask length mismatch");
      for (double w : ex.mask) total += w;
    }
  }
  return total;
}

LossAndGradient position_loss(const Network& net, const SequenceTrace& trace, const Example& ex, std::size_t p) {
  if (net.loss == LossKind::SoftmaxCrossEntropy) {
    if (p >= ex.labels.size()) throw DomainError("bptt_gradients: missing label");
    return softmax_cross_entropy(trace.logits[p], ex.labels[p]);
  }
  if (p >= ex.targets.size()) throw DomainError("bptt_gradients: missing target");
  return sigmoid_cross_entropy(trace.logits[p], ex.targets[p]);
}

void accumulate_example(const Network& net, const NetworkView& nv, const Example& ex, double inv_weight,
                        const ForwardOptions& options, BatchGradients& out) {
  const SequenceTrace trace = forward_sequence(nv, ex, options);
  const std::size_t steps = ex.length();
  const std::size_t h = net.hidden_dim();
  Network& g = out.gradient;
  const bool dropped = !trace.dropout_masks.empty();

  std::vector<Vector> dh(steps, Vector(h, 0.0));
  auto backprop_output = [&](std::size_t p, double weight) -> Vector {
    LossAndGradient lg = position_loss(net, trace, ex, p);
    out.totals.loss += weight * lg.loss;
    out.totals.weight += weight;
    const double scale = weight * inv_weight;
    for (double& v : lg.gradient) v *= scale;
    rank1_add(g.output.w, 1.0, lg.gradient, trace.readout_inputs[p]);
    for (std::size_t i = 0; i < lg.gradient.size(); ++i) g.output.bias[i] += lg.gradient[i];
    Vector dr(h, 0.0);
    matvec_transpose_add(net.output.w, lg.gradient, dr);
    if (dropped) {
      for (std::size_t j = 0; j < h; ++j) dr[j] *= trace.dropout_masks[p][j];
    }
    return dr;
  };

  if (net.readout == Readout::PerStep) {
    for (std::size_t t = 0; t < steps; ++t) {
      const double w = ex.mask.empty() ? 1.0 : ex.mask[t];
      if (w == 0.0) continue;
      dh[t] = backprop_output(t, w);
    }
  } else {
    const Vector dpool = backprop_output(0, 1.0);
    const double inv_steps = 1.0 / static_cast<double>(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t j = 0; j < h; ++j) dh[t][j] = dpool[j] * inv_steps;
    }
  }

  const Matrix& wf = net.forward_weights();
  const Matrix& wr = net.recurrent_weights();
  Matrix& gwf = g.forward_weights();
  Matrix& gwr = g.recurrent_weights();
  Vector& gb = g.cell_bias();
  const Activation act = net.cell_activation();
  const bool mgru = net.cell_kind() == CellKind::Mgru;

  Vector carry(h, 0.0);  // d loss / d state[t+1] from later steps
  Vector dz(mgru ? 2 * h : h);
  for (std::size_t t = steps; t-- > 0;) {
    const Vector& prev = trace.states[t];
    Vector ds = dh[t];
    for (std::size_t j = 0; j < h; ++j) ds[j] += carry[j];

    Vector next_carry(h, 0.0);
    if (!mgru) {
      const Vector& a = trace.states[t + 1];
      for (std::size_t j = 0; j < h; ++j) dz[j] = ds[j] * derivative_from_output(act, a[j]);
    } else {
      const Vector& ac = trace.gates[t];
      const Vector& ai = trace.candidates[t];
      for (std::size_t j = 0; j < h; ++j) {
        const double d_ai = ds[j] * ac[j];
        const double d_ac = ds[j] * (ai[j] - prev[j]);
        dz[j] = d_ai * derivative_from_output(act, ai[j]);
        dz[h + j] = d_ac * ac[j] * (1.0 - ac[j]);
        next_carry[j] = ds[j] * (1.0 - ac[j]);
      }
    }
    rank1_add(gwf, 1.0, dz, trace.inputs[t]);
    rank1_add(gwr, 1.0, dz, prev);
    for (std::size_t i = 0; i < dz.size(); ++i) gb[i] += dz[i];
    matvec_transpose_add(wr, dz, next_carry);
    if (net.embedding) {
      auto row = g.embedding->table.row(static_cast<std::size_t>(ex.tokens[t]));
      matvec_transpose_add(wf, dz, row);
    }
    carry = std::move(next_carry);
  }
  out.final_states.push_back(trace.final_state());
}

}  // namespace

BatchGradients bptt_gradients(const Network& net, std::span<const Example> batch, const ForwardOptions& options) {
  net.validate();
  BatchGradients out{zeros_like(net), {}, {}};
  const double total = batch_weight(net, batch);
  const double inv_weight = total > 0.0 ? 1.0 / total : 0.0;
  const NetworkView nv = view(net);
  out.final_states.reserve(batch.size());
  for (const auto& ex : batch) accumulate_example(net, nv, ex, inv_weight, options, out);
  return out;
}

Vector dropout_mask(std::size_t size, double keep_prob, Rng& rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw DomainError("dropout_mask: keep_prob must be in (0, 1]");
  Vector mask(size);
  for (double& m : mask) m = rng.bernoulli(keep_prob) ? 1.0 / keep_prob : 0.0;
  return mask;
}

}  // namespace rnncomp::nn
