#include "rnncomp/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "rnncomp/errors.hpp"
#include "rnncomp/random.hpp"
#include "rnncomp/tasks.hpp"

namespace rnncomp::perturbation {

namespace {

void check_shapes(const Matrix& wr, const Matrix& delta, std::span<const double> x, const char* what) {
  if (wr.rows() != wr.cols()) throw DomainError(std::string(what) + ": recurrent matrix must be square");
  if (delta.rows() != wr.rows() || delta.cols() != wr.cols()) {
    throw DomainError(std::string(what) + ": perturbation shape mismatch");
  }
  if (x.size() != wr.cols()) throw DomainError(std::string(what) + ": state length mismatch");
}

Vector power_apply(const Matrix& a, Vector x, std::size_t times) {
  for (std::size_t k = 0; k < times; ++k) x = matvec(a, x);
  return x;
}

}  // namespace

Vector predict_error(const Matrix& wr, const Matrix& delta, std::span<const double> x, std::size_t t) {
  check_shapes(wr, delta, x, "predict_error");
  if (t == 0) return Vector(x.size(), 0.0);
  // Horner form: r <- W_r r + delta W_r^j x for j = 0 .. T-1.
  Vector state(x.begin(), x.end());
  Vector r = matvec(delta, state);
  for (std::size_t j = 1; j < t; ++j) {
    state = matvec(wr, state);
    Vector next = matvec(wr, r);
    matvec_add(delta, state, next);
    r = std::move(next);
  }
  return r;
}

Vector predict_error_commuting(const Matrix& wr, const Matrix& delta, std::span<const double> x, std::size_t t) {
  check_shapes(wr, delta, x, "predict_error_commuting");
  if (t == 0) return Vector(x.size(), 0.0);
  Vector y = matvec(delta, power_apply(wr, Vector(x.begin(), x.end()), t - 1));
  for (double& v : y) v *= static_cast<double>(t);
  return y;
}

Vector exact_linear_error(const Matrix& wr, const Matrix& delta, std::span<const double> x, std::size_t t) {
  check_shapes(wr, delta, x, "exact_linear_error");
  if (t == 0) return Vector(x.size(), 0.0);
  // Telescoped as sum_k (W_r + delta)^k delta W_r^(T-1-k) x, which avoids
  // subtracting two nearly equal powers.
  const Matrix perturbed = wr + delta;
  Vector state(x.begin(), x.end());
  Vector r = matvec(delta, state);
  for (std::size_t j = 1; j < t; ++j) {
    state = matvec(wr, state);
    Vector next = matvec(perturbed, r);
    matvec_add(delta, state, next);
    r = std::move(next);
  }
  return r;
}

ErrorMeasurement measure_error(const nn::NetworkView& model, std::size_t n_bits, std::size_t delay,
                               std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw DomainError("measure_error: trials must be positive");
  if (model.output == nullptr || model.output->w.rows() != 1 || model.cell.forward.cols() != tasks::kMemorizationChannels) {
    throw DomainError("measure_error: model is not a memorization network");
  }
  double sum_sq = 0.0;
  std::size_t positions = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    Rng rng(derive_seed(seed, "memorize-trial", (static_cast<std::uint64_t>(delay) << 32) | k));
    const tasks::MemorizationSample s = tasks::gen_memorization(n_bits, delay, rng);
    const nn::SequenceTrace trace = nn::forward_sequence(model, s.to_example());
    for (std::size_t i = 0; i < n_bits; ++i) {
      const std::size_t step = s.recall_begin() + i;
      const double e = trace.outputs[step][0] - s.targets[step];
      sum_sq += e * e;
      ++positions;
    }
  }
  return {std::sqrt(sum_sq / static_cast<double>(positions)), trials, positions};
}

void ErrorSurface::validate() const {
  if (deltas.empty() || delays.empty()) throw DomainError("ErrorSurface: empty axis");
  if (rms.rows() != deltas.size() || rms.cols() != delays.size()) throw DomainError("ErrorSurface: shape mismatch");
  if (deltas.front() != 0.0) throw DomainError("ErrorSurface: delta grid must start at 0");
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    if (!(deltas[i] > deltas[i - 1])) throw DomainError("ErrorSurface: delta grid must ascend strictly");
  }
}

double cell_rms(std::span<const double> errors) {
  if (errors.empty()) throw DomainError("cell_rms: no samples");
  double s = 0.0;
  for (double e : errors) s += e * e;
  return std::sqrt(s / static_cast<double>(errors.size()));
}

BetaCurve beta(const ErrorSurface& surface, double delta_f) {
  surface.validate();
  if (!(delta_f >= surface.deltas.front()) || delta_f > surface.deltas.back()) {
    throw DomainError("beta: delta_f outside the sampled delta range");
  }
  BetaCurve out;
  out.delta_f = delta_f;
  out.delays = surface.delays;
  while (out.n_delta < surface.deltas.size() && surface.deltas[out.n_delta] <= delta_f) ++out.n_delta;
  out.beta.assign(surface.delays.size(), 0.0);
  for (std::size_t j = 0; j < surface.delays.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.n_delta; ++i) {
      const double v = surface.rms(i, j);
      if (!std::isfinite(v) || v < 0.0) throw DomainError("beta: missing or invalid cell in the integration range");
      s += v;
    }
    out.beta[j] = s / static_cast<double>(out.n_delta);
  }
  return out;
}

LinearFit linearity_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw DomainError("linearity_fit: at least 3 points required");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw DomainError("linearity_fit: x values have zero variance");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy > 0.0) {
    double ssr = 0.0;
    for (const auto& [x, y] : points) {
      const double r = y - (fit.intercept + fit.slope * x);
      ssr += r * r;
    }
    fit.r_squared = 1.0 - ssr / syy;
  }
  return fit;
}

}  // namespace rnncomp::perturbation
