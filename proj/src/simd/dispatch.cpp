#include "koopgram/simd.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace koopgram::simd {
namespace {

Isa detect() noexcept {
  if (const char* env = std::getenv("KOOPGRAM_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && supported(Isa::avx2)) return Isa::avx2;
    if (want == "neon" && supported(Isa::neon)) return Isa::neon;
  }
  if (supported(Isa::avx2)) return Isa::avx2;
  if (supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

}  // namespace

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(KOOPGRAM_BUILD_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(KOOPGRAM_BUILD_NEON)
      return true;  // Advanced SIMD is mandatory on AArch64.
#else
      return false;
#endif
  }
  return false;
}

std::string_view name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const Kernels& kernels_for(Isa isa) {
  if (!supported(isa))
    throw std::invalid_argument("simd: " + std::string(name(isa)) + " not available");
  switch (isa) {
#if defined(KOOPGRAM_BUILD_AVX2)
    case Isa::avx2: return avx2::table;
#endif
#if defined(KOOPGRAM_BUILD_NEON)
    case Isa::neon: return neon::table;
#endif
    default: return scalar::table;
  }
}

Isa active_isa() noexcept {
  static const Isa isa = detect();
  return isa;
}

const Kernels& kernels() noexcept {
  static const Kernels& k = kernels_for(active_isa());
  return k;
}

}  // namespace koopgram::simd
