#include "koopgram/errors.hpp"
#include "koopgram/harness.hpp"
#include "koopgram/simd.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace koopgram::harness {

namespace {

double tone_at(const Tone& k, double t) {
  const double s = t - k.delay;
  if (s < 0.0) return 0.0;
  double env = k.decay > 0.0 ? std::exp(-k.decay * s) : 1.0;
  if (k.window > 0.0) {
    if (s > k.window) return 0.0;
    const double w = std::sin(std::numbers::pi * s / k.window);
    env *= w * w;
  }
  return k.amp * env * std::sin(k.freq * s + 0.5 * k.chirp * s * s + k.phase);
}

double simpson_l2(const InputSignal& sig, int intervals) {
  const double h = sig.horizon / intervals;
  std::vector<double> w(static_cast<std::size_t>(intervals) + 1), zero(w.size(), 0.0);
  std::vector<std::vector<double>> ch(static_cast<std::size_t>(sig.l()), std::vector<double>(w.size()));
  Vector u(sig.l());
  for (int i = 0; i <= intervals; ++i) {
    w[i] = (i == 0 || i == intervals ? 1.0 : (i % 2 ? 4.0 : 2.0)) * h / 3.0;
    sig.eval(i * h, u);
    for (int j = 0; j < sig.l(); ++j) ch[j][i] = u(j);
  }
  const auto& k = simd::kernels();
  double total = 0.0;
  for (const auto& c : ch) total += k.weighted_sq_diff(w.data(), c.data(), zero.data(), w.size());
  return std::sqrt(total);
}

}  // namespace

void InputSignal::eval(double t, Vector& out) const {
  out.resize(l());
  for (int j = 0; j < l(); ++j) {
    double v = 0.0;
    for (const auto& k : channels[j]) v += tone_at(k, t);
    out(j) = v;
  }
}

Vector InputSignal::operator()(double t) const {
  Vector out;
  eval(t, out);
  return out;
}

std::vector<InputSignal> input_ensemble(int l, double horizon, int count, std::uint64_t seed, double amplitude) {
  if (l < 1) throw ValidationError("input_ensemble: input dimension must be positive");
  if (count < 1) throw ValidationError("input_ensemble: count must be at least 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("input_ensemble: horizon must be positive");
  if (!(amplitude > 0.0)) throw ValidationError("input_ensemble: amplitude must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const int per_family = (count + 2) / 3;

  std::vector<InputSignal> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    InputSignal s;
    s.horizon = horizon;
    s.channels.resize(static_cast<std::size_t>(l));
    const int family = i % 3;
    const int slot = i / 3;
    // log-spaced over [0.1, 10] rad/s, centred on 1 for a single slot
    const double w = std::pow(10.0, -1.0 + 2.0 * (slot + 0.5) / per_family);
    for (int j = 0; j < l; ++j) {
      auto& ch = s.channels[j];
      const bool canonical = i == 0 && j == 0;
      switch (family) {
        case 0: {
          s.family = "decayed_sine";
          Tone t;
          t.amp = amplitude;
          t.freq = canonical ? w : w * std::exp(0.3 * (unit(rng) - 0.5));
          t.decay = t.freq;
          t.phase = canonical ? 0.0 : two_pi * unit(rng);
          ch.push_back(t);
          break;
        }
        case 1: {
          s.family = "burst";
          const double window = horizon * (0.15 + 0.2 * unit(rng));
          const double delay = horizon * 0.2 * unit(rng);
          constexpr int tones = 4;
          for (int k = 0; k < tones; ++k) {
            Tone t;
            t.amp = amplitude / tones;
            t.freq = w * std::pow(10.0, unit(rng) - 0.5);
            t.phase = two_pi * unit(rng);
            t.delay = delay;
            t.window = window;
            ch.push_back(t);
          }
          break;
        }
        default: {
          s.family = "chirp";
          Tone t;
          t.amp = amplitude;
          const double sweep = 0.5 * horizon;
          t.freq = 0.1 * w;
          t.chirp = (10.0 * w - t.freq) / sweep;
          t.decay = 4.0 / horizon;
          t.window = 0.6 * horizon;
          t.phase = two_pi * unit(rng);
          ch.push_back(t);
          break;
        }
      }
    }
    s.l2_norm = simpson_l2(s, 200000);
    out.push_back(std::move(s));
  }
  return out;
}

double default_horizon(const Matrix& a_bal) {
  const double abscissa = numkernel::spectral_abscissa(a_bal);
  if (!(abscissa < 0.0)) throw SpectrumError("default_horizon: realization is not Hurwitz", abscissa, 0.0);
  return 20.0 / std::abs(abscissa);
}

}  // namespace koopgram::harness
