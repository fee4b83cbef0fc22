#include "rnncomp/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rnncomp/errors.hpp"
#include "rnncomp/kernels.hpp"

namespace rnncomp {

namespace {

struct TallSvd {
  // Row k holds the k-th left singular vector (length M); likewise for v.
  Matrix u_rows;
  Vector sigma;
  Matrix v_rows;
};

// Extends the orthonormal rows [0, count) of `basis` with rows that are
// orthonormal to them, for rows whose singular value is exactly zero.
void complete_row(Matrix& basis, std::size_t target, const std::vector<bool>& valid) {
  const std::size_t m = basis.cols();
  const auto& k = kernels::active();
  Vector best;
  double best_norm = -1.0;
  for (std::size_t e = 0; e < m; ++e) {
    Vector cand(m, 0.0);
    cand[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t r = 0; r < basis.rows(); ++r) {
        if (!valid[r]) continue;
        const double proj = k.dot(basis.row(r).data(), cand.data(), m);
        k.axpy(-proj, basis.row(r).data(), cand.data(), m);
      }
    }
    const double n = norm2(cand);
    if (n > best_norm + 1e-12) {
      best_norm = n;
      best = std::move(cand);
    }
    if (best_norm > 0.5) break;
  }
  auto row = basis.row(target);
  for (std::size_t i = 0; i < m; ++i) row[i] = best[i] / best_norm;
}

// Requires a.rows() >= a.cols().
TallSvd jacobi_tall(const Matrix& a, const SvdOptions& opt) {
  const std::size_t n = a.cols();
  const std::size_t m = a.rows();
  Matrix g = transpose(a);  // row j = column j of a
  Matrix v = Matrix::identity(n);
  const auto& k = kernels::active();

  int sweep = 0;
  double worst = 0.0;
  for (; sweep < opt.max_sweeps; ++sweep) {
    bool rotated = false;
    worst = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double gram[3];
        k.gram3(g.row(i).data(), g.row(j).data(), m, gram);
        const double alpha = gram[0];
        const double beta = gram[1];
        const double gamma = gram[2];
        if (alpha == 0.0 || beta == 0.0 || gamma == 0.0) continue;
        const double scale = std::sqrt(alpha) * std::sqrt(beta);
        const double off = std::abs(gamma) / scale;
        worst = std::max(worst, off);
        if (off <= opt.tolerance) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        k.rotate(g.row(i).data(), g.row(j).data(), m, c, s);
        k.rotate(v.row(i).data(), v.row(j).data(), n, c, s);
      }
    }
    if (!rotated) break;
  }
  if (sweep == opt.max_sweeps) {
    throw ConvergenceError("svd: one-sided Jacobi did not converge in " +
                               std::to_string(opt.max_sweeps) + " sweeps",
                           worst);
  }

  Vector norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = norm2(g.row(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  TallSvd out{Matrix(n, m), Vector(n), Matrix(n, n)};
  std::vector<bool> valid(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t src = order[r];
    out.sigma[r] = norms[src];
    auto vr = out.v_rows.row(r);
    std::copy(v.row(src).begin(), v.row(src).end(), vr.begin());
    if (norms[src] > 0.0) {
      auto ur = out.u_rows.row(r);
      const auto gr = g.row(src);
      for (std::size_t i = 0; i < m; ++i) ur[i] = gr[i] / norms[src];
      valid[r] = true;
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (!valid[r]) {
      complete_row(out.u_rows, r, valid);
      valid[r] = true;
    }
  }
  return out;
}

void fix_signs(Matrix& u_rows, Matrix& v_rows) {
  for (std::size_t r = 0; r < u_rows.rows(); ++r) {
    auto ur = u_rows.row(r);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < ur.size(); ++i) {
      if (std::abs(ur[i]) > std::abs(ur[arg])) arg = i;
    }
    if (ur[arg] < 0.0) {
      for (double& x : ur) x = -x;
      for (double& x : v_rows.row(r)) x = -x;
    }
  }
}

}  // namespace

Matrix SvdFactors::reconstruct() const {
  Matrix us = u;
  for (std::size_t r = 0; r < us.rows(); ++r) {
    for (std::size_t c = 0; c < us.cols(); ++c) us(r, c) *= sigma[c];
  }
  return multiply(us, transpose(v));
}

SvdFactors svd(const Matrix& w, const SvdOptions& options) {
  if (w.empty()) throw DomainError("svd: empty matrix");
  if (!all_finite(w.values())) throw DomainError("svd: non-finite entries");

  TallSvd t;
  if (w.rows() >= w.cols()) {
    t = jacobi_tall(w, options);
    fix_signs(t.u_rows, t.v_rows);
    return SvdFactors{transpose(t.u_rows), std::move(t.sigma), transpose(t.v_rows)};
  }
  // Wide: w^T = U' S V'^T, so w = V' S U'^T.
  t = jacobi_tall(transpose(w), options);
  fix_signs(t.v_rows, t.u_rows);
  return SvdFactors{transpose(t.v_rows), std::move(t.sigma), transpose(t.u_rows)};
}

Truncation truncate(const SvdFactors& f, std::size_t rank) {
  const std::size_t k = f.sigma.size();
  if (rank < 1 || rank > k) {
    throw DomainError("truncate: rank " + std::to_string(rank) + " outside [1, " + std::to_string(k) + "]");
  }
  const std::size_t m = f.u.rows();
  const std::size_t n = f.v.rows();
  Matrix q(m, rank);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < rank; ++c) q(i, c) = f.u(i, c) * f.sigma[c];
  }
  Matrix vt(rank, n);
  for (std::size_t c = 0; c < rank; ++c) {
    for (std::size_t j = 0; j < n; ++j) vt(c, j) = f.v(j, c);
  }
  return {std::move(q), std::move(vt)};
}

double tail_energy(const Vector& sigma, std::size_t rank) {
  double sum = 0.0;
  for (std::size_t i = rank; i < sigma.size(); ++i) sum += sigma[i] * sigma[i];
  return std::sqrt(sum);
}

SpectralRadius spectral_radius(const Matrix& w, const PowerIterationOptions& options) {
  if (w.rows() != w.cols()) throw DomainError("spectral_radius: matrix is not square");
  if (w.empty()) throw DomainError("spectral_radius: empty matrix");
  const std::size_t n = w.rows();

  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  const double x0 = norm2(x);
  for (double& v : x) v /= x0;

  SpectralRadius result;
  double previous = -1.0;
  int stable = 0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    Vector y = matvec(w, x);
    const double lambda = norm2(y);
    result.iterations = it;
    if (lambda == 0.0) {
      result.value = 0.0;
      return result;
    }
    if (previous >= 0.0 && std::abs(lambda - previous) <= options.relative_tolerance * lambda) {
      if (++stable >= options.stable_steps) {
        result.value = lambda;
        return result;
      }
    } else {
      stable = 0;
    }
    previous = lambda;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / lambda;
  }
  // Typically a complex-conjugate dominant pair; fall back to sigma_max.
  result.value = svd(w).sigma.front();
  result.bound_only = true;
  return result;
}

double rms_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("rms_diff: shape mismatch");
  if (a.empty()) throw DomainError("rms_diff: empty matrices");
  const auto av = a.values();
  const auto bv = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(av.size()));
}

}  // namespace rnncomp
