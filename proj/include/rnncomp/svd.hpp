#pragma once

#include <cstddef>

#include "rnncomp/matrix.hpp"

namespace rnncomp {

// Thin singular value decomposition w = u * diag(sigma) * v^T.
//
// u is M x K and v is N x K with K = min(M, N); sigma is sorted descending.
// Signs are fixed so that the largest-magnitude entry of every u column is
// non-negative (ties go to the lowest row index), which makes the factors a
// deterministic function of the input bits.
struct SvdFactors {
  Matrix u;
  Vector sigma;
  Matrix v;

  std::size_t rank_capacity() const noexcept { return sigma.size(); }
  Matrix reconstruct() const;
};

struct SvdOptions {
  int max_sweeps = 80;
  // Columns i, j count as orthogonal once |a_i . a_j| <= tol * |a_i| |a_j|.
  double tolerance = 1e-15;
};

// One-sided (Hestenes) Jacobi SVD. Throws ConvergenceError if the sweep cap is
// reached and DomainError on empty or non-finite input.
SvdFactors svd(const Matrix& w, const SvdOptions& options = {});

// Q = U_r * Sigma_r (M x r) and V_r^T (r x N).
struct Truncation {
  Matrix q;
  Matrix vt;
};

Truncation truncate(const SvdFactors& f, std::size_t rank);

// sqrt(sum_{i >= rank} sigma_i^2), the Frobenius error of the rank-r truncation.
double tail_energy(const Vector& sigma, std::size_t rank);

struct SpectralRadius {
  double value = 0.0;
  // True when power iteration did not settle and `value` is sigma_max, an
  // upper bound on the spectral radius.
  bool bound_only = false;
  int iterations = 0;
};

struct PowerIterationOptions {
  int max_iterations = 20000;
  double relative_tolerance = 1e-8;
  // The estimate must stay within tolerance for this many consecutive steps.
  int stable_steps = 5;
};

SpectralRadius spectral_radius(const Matrix& w, const PowerIterationOptions& options = {});

// sqrt(mean((a - b)^2)) over all entries.
double rms_diff(const Matrix& a, const Matrix& b);

}  // namespace rnncomp
