#include <cmath>

#include "doctest.h"
#include "rnncomp/kernels.hpp"
#include "test_support.hpp"

using namespace rnncomp;

namespace {

// Lengths straddling the 4- and 8-wide vector bodies and their tails.
constexpr std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 100, 129};

std::vector<const kernels::KernelTable*> tables() {
  std::vector<const kernels::KernelTable*> out{&kernels::scalar_table()};
  if (kernels::isa_supported(kernels::Isa::Avx2) && kernels::avx2_table()) out.push_back(kernels::avx2_table());
  return out;
}

double naive_dot(const Vector& x, const Vector& y) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<long double>(x[i]) * y[i];
  return static_cast<double>(s);
}

}  // namespace

TEST_CASE("dot kernels agree with a long-double reference") {
  Rng rng(11);
  for (const auto* k : tables()) {
    for (std::size_t n : kLengths) {
      const Vector x = testing::random_vector(n, rng);
      const Vector y = testing::random_vector(n, rng);
      const double ref = naive_dot(x, y);
      CHECK(k->dot(x.data(), y.data(), n) == doctest::Approx(ref).epsilon(1e-13));
    }
  }
}

TEST_CASE("axpy, rotate and gram3 match the scalar reference") {
  const auto all = tables();
  if (all.size() < 2) return;  // nothing to compare on this host
  const auto& ref = *all[0];
  const auto& simd = *all[1];
  Rng rng(12);
  for (std::size_t n : kLengths) {
    const Vector x = testing::random_vector(n, rng);
    const Vector y0 = testing::random_vector(n, rng);

    Vector ya = y0, yb = y0;
    ref.axpy(0.37, x.data(), ya.data(), n);
    simd.axpy(0.37, x.data(), yb.data(), n);
    CHECK(testing::max_abs_diff(ya, yb) <= 1e-15);

    Vector xa = x, xb = x;
    ya = y0;
    yb = y0;
    ref.rotate(xa.data(), ya.data(), n, 0.8, 0.6);
    simd.rotate(xb.data(), yb.data(), n, 0.8, 0.6);
    CHECK(testing::max_abs_diff(xa, xb) <= 1e-15);
    CHECK(testing::max_abs_diff(ya, yb) <= 1e-15);

    double ga[3], gb[3];
    ref.gram3(x.data(), y0.data(), n, ga);
    simd.gram3(x.data(), y0.data(), n, gb);
    for (int i = 0; i < 3; ++i) CHECK(ga[i] == doctest::Approx(gb[i]).epsilon(1e-13));
  }
}

TEST_CASE("forcing the scalar ISA is honoured") {
  const auto saved = kernels::active_isa();
  kernels::set_active_isa(kernels::Isa::Scalar);
  CHECK(kernels::active_isa() == kernels::Isa::Scalar);
  CHECK(&kernels::active() == &kernels::scalar_table());
  kernels::set_active_isa(saved);
}
