#include "koopgram/simd.hpp"

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace koopgram::simd::neon {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void lincomb(double* out, const double* base, double h, const double* coeffs,
             const double* const* ks, std::size_t nk, std::size_t n) {
  const float64x2_t vh = vdupq_n_f64(h);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t j = 0; j < nk; ++j)
      acc = vfmaq_f64(acc, vdupq_n_f64(coeffs[j]), vld1q_f64(ks[j] + i));
    vst1q_f64(out + i, vfmaq_f64(vld1q_f64(base + i), vh, acc));
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < nk; ++j) acc += coeffs[j] * ks[j][i];
    out[i] = base[i] + h * acc;
  }
}

double scaled_sq_norm(const double* err, const double* y0, const double* y1,
                      double atol, double rtol, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(atol);
  const float64x2_t vr = vdupq_n_f64(rtol);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t m = vmaxq_f64(vabsq_f64(vld1q_f64(y0 + i)), vabsq_f64(vld1q_f64(y1 + i)));
    float64x2_t r = vdivq_f64(vld1q_f64(err + i), vfmaq_f64(va, vr, m));
    acc = vfmaq_f64(acc, r, r);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    s += r * r;
  }
  return s;
}

double weighted_sq_diff(const double* w, const double* a, const double* b,
                        std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, vmulq_f64(vld1q_f64(w + i), d), d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += w[i] * d * d;
  }
  return s;
}

}  // namespace

const Kernels table{dot, axpy, lincomb, scaled_sq_norm, weighted_sq_diff};

}  // namespace koopgram::simd::neon
