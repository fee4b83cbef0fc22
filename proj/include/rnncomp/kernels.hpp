#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Inner-loop kernels shared by the linear algebra and network code.
//
// Every kernel has a portable scalar reference implementation. When the host
// supports AVX2+FMA an intrinsic variant is selected once at startup; the
// choice can be pinned with RNNCOMP_ISA=scalar|avx2 (mainly for tests and for
// reproducing results across machines).
namespace rnncomp::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // (x, y) <- (c*x - s*y, s*x + c*y)
  void (*rotate)(double* x, double* y, std::size_t n, double c, double s);
  // returns sum x^2, sum y^2, sum x*y in one pass
  void (*gram3)(const double* x, const double* y, std::size_t n, double out[3]);
};

const KernelTable& scalar_table();
// Null when the binary was built without AVX2 support.
const KernelTable* avx2_table();

bool isa_supported(Isa isa);
Isa active_isa();
// Throws DomainError if the ISA is not supported on this host.
void set_active_isa(Isa isa);
const KernelTable& active();
std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

inline void rotate(std::span<double> x, std::span<double> y, double c, double s) {
  active().rotate(x.data(), y.data(), x.size(), c, s);
}

}  // namespace rnncomp::kernels
