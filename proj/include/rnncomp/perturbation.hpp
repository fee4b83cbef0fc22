#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rnncomp/matrix.hpp"
#include "rnncomp/nn/network.hpp"

namespace rnncomp::perturbation {

// First-order memory error after T linear unfoldings:
//   sum_{k=0}^{T-1} W_r^k delta W_r^(T-1-k) x,
// which is T delta W_r^(T-1) x whenever delta commutes with W_r. Zero for
// t = 0.
Vector predict_error(const Matrix& wr, const Matrix& delta, std::span<const double> x, std::size_t t);

// T delta W_r^(T-1) x. Matches predict_error only when delta and W_r commute;
// otherwise its residual against the exact error is itself first order.
Vector predict_error_commuting(const Matrix& wr, const Matrix& delta, std::span<const double> x, std::size_t t);

// (W_r + delta)^T x - W_r^T x for the linearized network.
Vector exact_linear_error(const Matrix& wr, const Matrix& delta, std::span<const double> x, std::size_t t);

struct ErrorMeasurement {
  double rms = 0.0;
  std::size_t trials = 0;
  std::size_t positions = 0;  // recall outputs scored
};

// RMS of (output - target bit) over every recall step of `trials` fresh
// memorization samples at the given delay. Trial k draws its sample from
// derive_seed(seed, "memorize-trial", (delay << 32) | k), so every model sees
// the same samples for a given (seed, delay).
ErrorMeasurement measure_error(const nn::NetworkView& model, std::size_t n_bits, std::size_t delay,
                               std::size_t trials, std::uint64_t seed);

// RMS error indexed by (delta, delay). deltas ascend strictly from 0.
struct ErrorSurface {
  Vector deltas;
  std::vector<std::size_t> delays;
  Matrix rms;  // deltas.size() x delays.size()

  void validate() const;
};

struct BetaCurve {
  double delta_f = 0.0;
  std::size_t n_delta = 0;  // grid points at or below delta_f
  std::vector<std::size_t> delays;
  Vector beta;  // one value per delay
};

// sqrt(mean(errors^2)); the per-cell quantity that beta averages.
double cell_rms(std::span<const double> errors);

// beta(T) = (1 / N) sum over grid deltas <= delta_f of rms(delta, T). Throws
// DomainError when delta_f lies outside [deltas.front(), deltas.back()].
BetaCurve beta(const ErrorSurface& surface, double delta_f);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  // 1 - SSR/SST; defined as 0 when the responses are constant (SST = 0).
  double r_squared = 0.0;
};

// Ordinary least squares of y on x. Needs at least 3 points and distinct x.
LinearFit linearity_fit(std::span<const std::pair<double, double>> points);

}  // namespace rnncomp::perturbation
