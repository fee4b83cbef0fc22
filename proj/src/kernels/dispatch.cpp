#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "rnncomp/errors.hpp"
#include "rnncomp/kernels.hpp"

namespace rnncomp::kernels {

namespace {

constexpr KernelTable kScalar{detail::dot_scalar, detail::axpy_scalar, detail::rotate_scalar,
                              detail::gram3_scalar};

#if RNNCOMP_HAVE_AVX2
constexpr KernelTable kAvx2{detail::dot_avx2, detail::axpy_avx2, detail::rotate_avx2,
                            detail::gram3_avx2};
#endif

bool cpu_has_avx2() {
#if RNNCOMP_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("RNNCOMP_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::Scalar;
    if (want == "avx2" && cpu_has_avx2()) return Isa::Avx2;
  }
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

Isa g_isa = initial_isa();
const KernelTable* g_table = nullptr;

const KernelTable& table_for(Isa isa) {
#if RNNCOMP_HAVE_AVX2
  if (isa == Isa::Avx2) return kAvx2;
#endif
  (void)isa;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if RNNCOMP_HAVE_AVX2
  return &kAvx2;
#else
  return nullptr;
#endif
}

bool isa_supported(Isa isa) { return isa == Isa::Scalar || cpu_has_avx2(); }

Isa active_isa() { return g_isa; }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw DomainError("kernel ISA " + std::string(isa_name(isa)) + " not supported on this CPU");
  }
  g_isa = isa;
  g_table = &table_for(isa);
}

const KernelTable& active() {
  if (g_table == nullptr) g_table = &table_for(g_isa);
  return *g_table;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

}  // namespace rnncomp::kernels
