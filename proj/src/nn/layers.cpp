#include "rnncomp/nn/layers.hpp"

#include <string>

#include "rnncomp/errors.hpp"

namespace rnncomp::nn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace

void RnnLayer::validate() const {
  require(wr.rows() == wr.cols() && wr.rows() > 0, "RnnLayer: recurrent matrix must be square");
  require(w.rows() == wr.rows(), "RnnLayer: forward rows must equal hidden size");
  require(bias.size() == wr.rows(), "RnnLayer: bias length must equal hidden size");
}

void MgruLayer::validate() const {
  const std::size_t h = wr.cols();
  require(h > 0 && wr.rows() == 2 * h, "MgruLayer: recurrent matrix must be 2H x H");
  require(wf.rows() == 2 * h, "MgruLayer: forward matrix must have 2H rows");
  require(bias.size() == 2 * h, "MgruLayer: bias length must be 2H");
}

void DenseLayer::validate() const {
  require(bias.size() == w.rows(), "DenseLayer: bias length must equal output size");
}

Vector rnn_step(const RnnLayer& layer, std::span<const double> x, std::span<const double> h_prev) {
  layer.validate();
  if (x.size() != layer.input_dim() || h_prev.size() != layer.hidden_dim()) {
    throw DomainError("rnn_step: input or state length mismatch");
  }
  Vector z = layer.bias;
  matvec_add(layer.w, x, z);
  matvec_add(layer.wr, h_prev, z);
  for (double& v : z) v = activate(layer.activation, v);
  return z;
}

MgruStep mgru_step(const MgruLayer& layer, std::span<const double> x, std::span<const double> s_prev) {
  layer.validate();
  const std::size_t h = layer.hidden_dim();
  if (x.size() != layer.input_dim() || s_prev.size() != h) {
    throw DomainError("mgru_step: input or state length mismatch");
  }
  Vector z = layer.bias;
  matvec_add(layer.wf, x, z);
  matvec_add(layer.wr, s_prev, z);
  MgruStep out{Vector(h), Vector(h), Vector(h)};
  for (std::size_t j = 0; j < h; ++j) {
    const double ai = activate(layer.input_activation, z[j]);
    const double ac = activate(Activation::Sigmoid, z[h + j]);
    out.candidate[j] = ai;
    out.gate[j] = ac;
    out.s[j] = ac * ai + (1.0 - ac) * s_prev[j];
  }
  return out;
}

Vector dense_apply(const DenseLayer& layer, std::span<const double> x) {
  layer.validate();
  if (x.size() != layer.w.cols()) throw DomainError("dense_apply: input length mismatch");
  Vector z = layer.bias;
  matvec_add(layer.w, x, z);
  for (double& v : z) v = activate(layer.activation, v);
  return z;
}

}  // namespace rnncomp::nn
