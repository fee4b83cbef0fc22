#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rnncomp/linear_map.hpp"
#include "rnncomp/nn/activation.hpp"
#include "rnncomp/nn/network.hpp"
#include "rnncomp/svd.hpp"

namespace rnncomp {

// Low-rank linear layer y = Q (V^T x) + bias with Q = U_r Sigma_r.
struct FactoredLinear {
  Matrix q;   // M x R
  Matrix vt;  // R x N
  Vector bias;

  std::size_t rank() const noexcept { return q.cols(); }
  std::size_t rows() const noexcept { return q.rows(); }
  std::size_t cols() const noexcept { return vt.cols(); }
  // R (M + N), bias excluded.
  std::size_t parameter_count() const noexcept { return rank() * (rows() + cols()); }
  // R (M + N) + M per application.
  std::size_t multiply_adds() const noexcept { return parameter_count() + rows(); }
  LinearMap map() const { return LinearMap::factored(q, vt); }
  Matrix reconstruct() const { return multiply(q, vt); }
};

// Throws DomainError unless 1 <= rank <= min(M, N). An empty bias means zeros.
FactoredLinear compress_matrix(const Matrix& w, std::size_t rank, Vector bias = {});
FactoredLinear compress_matrix(const SvdFactors& factors, std::size_t rank, Vector bias);

// activation(Q (V^T x) + bias), evaluated inner product first.
Vector factored_apply(const FactoredLinear& fl, std::span<const double> x, nn::Activation activation);

// RMS entry difference between w and its rank-r truncation, from the
// singular values: sqrt(sum_{i >= r} sigma_i^2 / (M N)). Exactly zero at
// full rank and non-increasing in r.
double compression_delta(const Matrix& w, std::size_t rank);
double compression_delta(const SvdFactors& factors, std::size_t rows, std::size_t cols, std::size_t rank);

// A missing rank means the matrix is left dense.
struct CompressionPlan {
  std::optional<std::size_t> forward_rank;
  std::optional<std::size_t> recurrent_rank;

  static CompressionPlan full() { return {}; }
  std::string describe() const;
};

// Largest admissible ranks for a network's forward and recurrent matrices.
struct RankLimits {
  std::size_t forward = 0;
  std::size_t recurrent = 0;
};
RankLimits rank_limits(const nn::Network& net);

// Throws DomainError naming the valid ranges when the plan does not fit.
void validate_plan(const nn::Network& net, const CompressionPlan& plan);

// SVDs of the cell's forward and recurrent matrices, reusable across plans.
struct ModelFactors {
  SvdFactors forward;
  SvdFactors recurrent;
};
ModelFactors factorize(const nn::Network& net);

// A network whose recurrent-cell matrices are replaced by factored layers.
// The embedding and output layer are copied bit-for-bit.
class CompressedModel {
 public:
  CompressedModel(nn::Network base, CompressionPlan plan, std::optional<FactoredLinear> forward,
                  std::optional<FactoredLinear> recurrent);

  const nn::Network& base() const noexcept { return base_; }
  const CompressionPlan& plan() const noexcept { return plan_; }
  const std::optional<FactoredLinear>& forward() const noexcept { return forward_; }
  const std::optional<FactoredLinear>& recurrent() const noexcept { return recurrent_; }

  // Factored evaluation path. The view borrows from *this.
  nn::NetworkView view() const;
  // Dense network holding Q V^T in place of each compressed matrix.
  nn::Network reconstructed() const;

 private:
  nn::Network base_;
  CompressionPlan plan_;
  std::optional<FactoredLinear> forward_;
  std::optional<FactoredLinear> recurrent_;
};

// MGRU stacked matrices are compressed as single matrices. No fine-tuning.
CompressedModel compress_model(const nn::Network& net, const CompressionPlan& plan);
CompressedModel compress_model(const nn::Network& net, const CompressionPlan& plan, const ModelFactors& factors);

struct MatrixReport {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 0;  // equals min(rows, cols) when left dense
  bool compressed = false;
  double delta = 0.0;
  std::size_t dense_parameters = 0;
  std::size_t stored_parameters = 0;  // R (M + N) when compressed, M N otherwise
  std::size_t dense_multiply_adds = 0;
  std::size_t stored_multiply_adds = 0;
  double ratio() const noexcept {
    return dense_parameters == 0 ? 1.0 : static_cast<double>(stored_parameters) / static_cast<double>(dense_parameters);
  }
};

std::vector<MatrixReport> compression_report(const nn::Network& net, const CompressionPlan& plan,
                                             const ModelFactors& factors);

}  // namespace rnncomp
