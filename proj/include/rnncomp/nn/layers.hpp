#pragma once

#include <cstddef>
#include <span>

#include "rnncomp/matrix.hpp"
#include "rnncomp/nn/activation.hpp"

namespace rnncomp::nn {

enum class CellKind { Rnn, Mgru };

// h(t) = f(W x(t) + Wr h(t-1) + b)
struct RnnLayer {
  Matrix w;   // hidden x input
  Matrix wr;  // hidden x hidden
  Vector bias;
  Activation activation = Activation::Tanh;

  std::size_t input_dim() const noexcept { return w.cols(); }
  std::size_t hidden_dim() const noexcept { return wr.rows(); }
  void validate() const;
};

// Minimal gated recurrent unit with stacked weights. Rows [0, H) of wf, wr
// and bias feed the input unit a_i, rows [H, 2H) feed the control gate a_c:
//
//   a_c = sigmoid(Wc^f x + Wc^r s(t-1) + b_c)
//   a_i = f(Wi^f x + Wi^r s(t-1) + b_i)
//   s   = a_c * a_i + (1 - a_c) * s(t-1)
struct MgruLayer {
  Matrix wf;  // 2H x input
  Matrix wr;  // 2H x H
  Vector bias;
  Activation input_activation = Activation::Tanh;

  std::size_t input_dim() const noexcept { return wf.cols(); }
  std::size_t hidden_dim() const noexcept { return wr.cols(); }
  void validate() const;
};

struct DenseLayer {
  Matrix w;
  Vector bias;
  Activation activation = Activation::Identity;

  void validate() const;
};

struct Embedding {
  Matrix table;  // vocab x dim

  std::size_t vocab_size() const noexcept { return table.rows(); }
  std::size_t dim() const noexcept { return table.cols(); }
};

Vector rnn_step(const RnnLayer& layer, std::span<const double> x, std::span<const double> h_prev);

struct MgruStep {
  Vector s;
  Vector gate;       // a_c
  Vector candidate;  // a_i
};

MgruStep mgru_step(const MgruLayer& layer, std::span<const double> x, std::span<const double> s_prev);

Vector dense_apply(const DenseLayer& layer, std::span<const double> x);

}  // namespace rnncomp::nn
