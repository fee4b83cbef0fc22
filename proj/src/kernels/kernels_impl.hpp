#pragma once

#include <cstddef>

namespace rnncomp::kernels::detail {

double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
void rotate_scalar(double* x, double* y, std::size_t n, double c, double s);
void gram3_scalar(const double* x, const double* y, std::size_t n, double out[3]);

#if RNNCOMP_HAVE_AVX2
double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
void rotate_avx2(double* x, double* y, std::size_t n, double c, double s);
void gram3_avx2(const double* x, const double* y, std::size_t n, double out[3]);
#endif

}  // namespace rnncomp::kernels::detail
