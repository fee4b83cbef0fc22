#pragma once

#include <cstddef>
#include <span>

#include "rnncomp/matrix.hpp"

namespace rnncomp {

// Non-owning view of a linear map y += A x where A is either a dense matrix
// or a low-rank product Q (V^T x). The referenced matrices must outlive the
// view.
class LinearMap {
 public:
  // Empty map (0 x 0); applying it is an error.
  LinearMap() = default;
  static LinearMap dense(const Matrix& a) { return LinearMap(&a, nullptr, nullptr); }
  static LinearMap factored(const Matrix& q, const Matrix& vt);

  bool is_factored() const noexcept { return q_ != nullptr; }
  std::size_t rows() const noexcept { return dense_ ? dense_->rows() : q_ ? q_->rows() : 0; }
  std::size_t cols() const noexcept { return dense_ ? dense_->cols() : vt_ ? vt_->cols() : 0; }
  std::size_t rank() const noexcept;

  // Multiply-adds per application, excluding any bias.
  std::size_t multiply_adds() const noexcept;

  // `scratch` must hold at least rank() entries for factored maps.
  void apply_add(std::span<const double> x, std::span<double> y, std::span<double> scratch) const;
  void apply_add(std::span<const double> x, std::span<double> y) const;

 private:
  LinearMap(const Matrix* dense, const Matrix* q, const Matrix* vt) : dense_(dense), q_(q), vt_(vt) {}

  const Matrix* dense_ = nullptr;
  const Matrix* q_ = nullptr;
  const Matrix* vt_ = nullptr;
};

}  // namespace rnncomp
