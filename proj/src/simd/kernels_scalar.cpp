#include "koopgram/simd.hpp"

#include <algorithm>
#include <cmath>

namespace koopgram::simd::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void lincomb(double* out, const double* base, double h, const double* coeffs,
             const double* const* ks, std::size_t nk, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < nk; ++j) acc += coeffs[j] * ks[j][i];
    out[i] = base[i] + h * acc;
  }
}

double scaled_sq_norm(const double* err, const double* y0, const double* y1,
                      double atol, double rtol, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    s += r * r;
  }
  return s;
}

double weighted_sq_diff(const double* w, const double* a, const double* b,
                        std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += w[i] * d * d;
  }
  return s;
}

}  // namespace

const Kernels table{dot, axpy, lincomb, scaled_sq_norm, weighted_sq_diff};

}  // namespace koopgram::simd::scalar
