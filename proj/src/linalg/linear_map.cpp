#include "rnncomp/linear_map.hpp"

#include <algorithm>

#include "rnncomp/errors.hpp"

namespace rnncomp {

LinearMap LinearMap::factored(const Matrix& q, const Matrix& vt) {
  if (q.cols() != vt.rows()) throw DomainError("LinearMap::factored: inner rank mismatch");
  return LinearMap(nullptr, &q, &vt);
}

std::size_t LinearMap::rank() const noexcept {
  if (q_) return q_->cols();
  if (!dense_) return 0;
  return std::min(dense_->rows(), dense_->cols());
}

std::size_t LinearMap::multiply_adds() const noexcept {
  if (q_) return q_->cols() * (q_->rows() + vt_->cols());
  if (!dense_) return 0;
  return dense_->rows() * dense_->cols();
}

void LinearMap::apply_add(std::span<const double> x, std::span<double> y, std::span<double> scratch) const {
  if (dense_) {
    matvec_add(*dense_, x, y);
    return;
  }
  if (!q_) throw DomainError("LinearMap::apply_add: empty map");
  const std::size_t r = q_->cols();
  if (scratch.size() < r) throw DomainError("LinearMap::apply_add: scratch too small");
  auto inner = scratch.first(r);
  std::fill(inner.begin(), inner.end(), 0.0);
  matvec_add(*vt_, x, inner);
  matvec_add(*q_, inner, y);
}

void LinearMap::apply_add(std::span<const double> x, std::span<double> y) const {
  Vector scratch(q_ ? q_->cols() : 0);
  apply_add(x, y, scratch);
}

}  // namespace rnncomp
