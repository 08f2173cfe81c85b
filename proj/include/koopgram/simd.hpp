#pragma once

#include <cstddef>
#include <string_view>

// Flat double kernels used on the integrator and quadrature hot paths.
// Each kernel has a scalar reference; AVX2/FMA and NEON variants are picked
// at startup from CPU features. KOOPGRAM_SIMD=scalar forces the reference.

namespace koopgram::simd {

enum class Isa { scalar, avx2, neon };

struct Kernels {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = base + h * sum_j coeffs[j] * ks[j]
  void (*lincomb)(double* out, const double* base, double h, const double* coeffs,
                  const double* const* ks, std::size_t nk, std::size_t n);
  // sum_i (err_i / (atol + rtol * max(|y0_i|, |y1_i|)))^2
  double (*scaled_sq_norm)(const double* err, const double* y0, const double* y1,
                           double atol, double rtol, std::size_t n);
  // sum_i w_i (a_i - b_i)^2
  double (*weighted_sq_diff)(const double* w, const double* a, const double* b,
                             std::size_t n);
};

bool supported(Isa isa) noexcept;
std::string_view name(Isa isa) noexcept;

// Throws std::invalid_argument when the ISA is not available on this host.
const Kernels& kernels_for(Isa isa);

Isa active_isa() noexcept;
const Kernels& kernels() noexcept;

namespace scalar {
extern const Kernels table;
}
#if defined(KOOPGRAM_BUILD_AVX2)
namespace avx2 {
extern const Kernels table;
}
#endif
#if defined(KOOPGRAM_BUILD_NEON)
namespace neon {
extern const Kernels table;
}
#endif

}  // namespace koopgram::simd
