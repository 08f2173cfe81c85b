#include "doctest.h"
#include "koopgram/simd.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace koopgram;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo = -3.0, double hi = 3.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<simd::Isa> available() {
  std::vector<simd::Isa> out;
  for (auto isa : {simd::Isa::avx2, simd::Isa::neon})
    if (simd::supported(isa)) out.push_back(isa);
  return out;
}

bool close(double a, double b, double rel = 1e-13) {
  return std::abs(a - b) <= rel * (1.0 + std::abs(a) + std::abs(b));
}

}  // namespace

TEST_CASE("scalar table is always present and reported") {
  CHECK(simd::supported(simd::Isa::scalar));
  CHECK(simd::name(simd::Isa::scalar) == "scalar");
  CHECK_NOTHROW(simd::kernels_for(simd::Isa::scalar));
  CHECK(simd::supported(simd::active_isa()));
}

TEST_CASE("unsupported isa is rejected") {
  for (auto isa : {simd::Isa::avx2, simd::Isa::neon})
    if (!simd::supported(isa)) CHECK_THROWS_AS(simd::kernels_for(isa), std::invalid_argument);
}

TEST_CASE("vector kernels agree with the scalar reference across lengths") {
  const auto& ref = simd::kernels_for(simd::Isa::scalar);
  std::mt19937_64 rng(7);
  for (auto isa : available()) {
    const auto& k = simd::kernels_for(isa);
    CAPTURE(simd::name(isa));
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 100u, 1001u}) {
      CAPTURE(n);
      auto a = random_vec(rng, n), b = random_vec(rng, n), w = random_vec(rng, n, 0.0, 1.0);
      CHECK(close(k.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)));
      CHECK(close(k.weighted_sq_diff(w.data(), a.data(), b.data(), n),
                  ref.weighted_sq_diff(w.data(), a.data(), b.data(), n)));
      CHECK(close(k.scaled_sq_norm(a.data(), b.data(), w.data(), 1e-6, 1e-3, n),
                  ref.scaled_sq_norm(a.data(), b.data(), w.data(), 1e-6, 1e-3, n)));

      auto y1 = b, y2 = b;
      k.axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i]));

      for (std::size_t nk : {0u, 1u, 3u, 7u}) {
        std::vector<std::vector<double>> ks;
        std::vector<const double*> kp;
        for (std::size_t j = 0; j < nk; ++j) ks.push_back(random_vec(rng, n));
        for (auto& v : ks) kp.push_back(v.data());
        auto coeffs = random_vec(rng, nk);
        std::vector<double> o1(n), o2(n);
        k.lincomb(o1.data(), a.data(), 0.125, coeffs.data(), kp.data(), nk, n);
        ref.lincomb(o2.data(), a.data(), 0.125, coeffs.data(), kp.data(), nk, n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(o1[i], o2[i]));
      }
    }
  }
}

TEST_CASE("scalar reference values") {
  const auto& k = simd::kernels_for(simd::Isa::scalar);
  const double a[] = {1, 2, 3}, b[] = {4, 5, 6}, w[] = {1, 0.5, 2};
  CHECK(k.dot(a, b, 3) == 32.0);
  CHECK(k.weighted_sq_diff(w, a, b, 3) == doctest::Approx(9 + 4.5 + 18));
  const double err[] = {2e-3, 0}, y0[] = {1, 0}, y1[] = {-1, 0};
  CHECK(k.scaled_sq_norm(err, y0, y1, 1e-3, 1e-3, 2) == doctest::Approx(1.0 + 0.0));
}
