#include "rnncomp/compression.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "rnncomp/errors.hpp"

namespace rnncomp {

namespace {

void check_rank(std::size_t rank, std::size_t limit, const char* what) {
  if (rank < 1 || rank > limit) {
    throw DomainError(std::string(what) + ": rank " + std::to_string(rank) + " outside [1, " + std::to_string(limit) +
                      "]");
  }
}

}  // namespace

FactoredLinear compress_matrix(const SvdFactors& factors, std::size_t rank, Vector bias) {
  const std::size_t m = factors.u.rows();
  if (bias.empty()) bias.assign(m, 0.0);
  if (bias.size() != m) throw DomainError("compress_matrix: bias length mismatch");
  check_rank(rank, factors.rank_capacity(), "compress_matrix");
  Truncation t = truncate(factors, rank);
  return FactoredLinear{std::move(t.q), std::move(t.vt), std::move(bias)};
}

FactoredLinear compress_matrix(const Matrix& w, std::size_t rank, Vector bias) {
  check_rank(rank, std::min(w.rows(), w.cols()), "compress_matrix");
  return compress_matrix(svd(w), rank, std::move(bias));
}

Vector factored_apply(const FactoredLinear& fl, std::span<const double> x, nn::Activation activation) {
  if (x.size() != fl.cols()) throw DomainError("factored_apply: input length mismatch");
  Vector y = fl.bias.empty() ? Vector(fl.rows(), 0.0) : fl.bias;
  fl.map().apply_add(x, y);
  for (double& v : y) v = nn::activate(activation, v);
  return y;
}

double compression_delta(const SvdFactors& factors, std::size_t rows, std::size_t cols, std::size_t rank) {
  check_rank(rank, factors.rank_capacity(), "compression_delta");
  if (rank == factors.rank_capacity()) return 0.0;
  const double tail = tail_energy(factors.sigma, rank);
  return tail / std::sqrt(static_cast<double>(rows) * static_cast<double>(cols));
}

double compression_delta(const Matrix& w, std::size_t rank) {
  check_rank(rank, std::min(w.rows(), w.cols()), "compression_delta");
  return compression_delta(svd(w), w.rows(), w.cols(), rank);
}

std::string CompressionPlan::describe() const {
  auto one = [](const std::optional<std::size_t>& r) { return r ? std::to_string(*r) : std::string("full"); };
  return "forward=" + one(forward_rank) + " recurrent=" + one(recurrent_rank);
}

RankLimits rank_limits(const nn::Network& net) {
  const Matrix& f = net.forward_weights();
  const Matrix& r = net.recurrent_weights();
  return {std::min(f.rows(), f.cols()), std::min(r.rows(), r.cols())};
}

void validate_plan(const nn::Network& net, const CompressionPlan& plan) {
  const RankLimits lim = rank_limits(net);
  const bool bad_f = plan.forward_rank && (*plan.forward_rank < 1 || *plan.forward_rank > lim.forward);
  const bool bad_r = plan.recurrent_rank && (*plan.recurrent_rank < 1 || *plan.recurrent_rank > lim.recurrent);
  if (bad_f || bad_r) {
    throw DomainError("compression plan " + plan.describe() + " out of range: forward rank must be in [1, " +
                      std::to_string(lim.forward) + "], recurrent rank in [1, " + std::to_string(lim.recurrent) + "]");
  }
}

ModelFactors factorize(const nn::Network& net) {
  return {svd(net.forward_weights()), svd(net.recurrent_weights())};
}

CompressedModel::CompressedModel(nn::Network base, CompressionPlan plan, std::optional<FactoredLinear> forward,
                                 std::optional<FactoredLinear> recurrent)
    : base_(std::move(base)), plan_(plan), forward_(std::move(forward)), recurrent_(std::move(recurrent)) {
  auto check = [](const std::optional<FactoredLinear>& fl, const Matrix& w, const char* what) {
    if (fl && (fl->rows() != w.rows() || fl->cols() != w.cols())) {
      throw DomainError(std::string("CompressedModel: ") + what + " factor shape mismatch");
    }
  };
  check(forward_, base_.forward_weights(), "forward");
  check(recurrent_, base_.recurrent_weights(), "recurrent");
}

nn::NetworkView CompressedModel::view() const {
  nn::NetworkView v = nn::view(base_);
  if (forward_) v.cell.forward = forward_->map();
  if (recurrent_) v.cell.recurrent = recurrent_->map();
  return v;
}

nn::Network CompressedModel::reconstructed() const {
  nn::Network net = base_;
  if (forward_) net.forward_weights() = forward_->reconstruct();
  if (recurrent_) net.recurrent_weights() = recurrent_->reconstruct();
  return net;
}

CompressedModel compress_model(const nn::Network& net, const CompressionPlan& plan, const ModelFactors& factors) {
  validate_plan(net, plan);
  std::optional<FactoredLinear> forward;
  std::optional<FactoredLinear> recurrent;
  if (plan.forward_rank) forward = compress_matrix(factors.forward, *plan.forward_rank, net.cell_bias());
  if (plan.recurrent_rank) recurrent = compress_matrix(factors.recurrent, *plan.recurrent_rank, {});
  return CompressedModel(net, plan, std::move(forward), std::move(recurrent));
}

CompressedModel compress_model(const nn::Network& net, const CompressionPlan& plan) {
  validate_plan(net, plan);
  ModelFactors factors;
  if (plan.forward_rank) factors.forward = svd(net.forward_weights());
  if (plan.recurrent_rank) factors.recurrent = svd(net.recurrent_weights());
  return compress_model(net, plan, factors);
}

std::vector<MatrixReport> compression_report(const nn::Network& net, const CompressionPlan& plan,
                                             const ModelFactors& factors) {
  validate_plan(net, plan);
  auto one = [](const char* name, const Matrix& w, const SvdFactors& f, const std::optional<std::size_t>& rank) {
    MatrixReport r;
    r.name = name;
    r.rows = w.rows();
    r.cols = w.cols();
    r.dense_parameters = w.size();
    r.dense_multiply_adds = w.size() + w.rows();
    r.compressed = rank.has_value();
    r.rank = rank.value_or(std::min(w.rows(), w.cols()));
    if (r.compressed) {
      r.delta = compression_delta(f, w.rows(), w.cols(), r.rank);
      r.stored_parameters = r.rank * (r.rows + r.cols);
      r.stored_multiply_adds = r.stored_parameters + r.rows;
    } else {
      r.stored_parameters = r.dense_parameters;
      r.stored_multiply_adds = r.dense_multiply_adds;
    }
    return r;
  };
  return {one("cell.forward", net.forward_weights(), factors.forward, plan.forward_rank),
          one("cell.recurrent", net.recurrent_weights(), factors.recurrent, plan.recurrent_rank)};
}

}  // namespace rnncomp
