#pragma once

#include "koopgram/balance.hpp"
#include "koopgram/certify.hpp"
#include "koopgram/numkernel.hpp"
#include "koopgram/system.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace koopgram::harness {

// lti6, slow_manifold, slow_manifold_identity, tanh1d
std::vector<ControlSystem> builtin_systems();
ControlSystem builtin_system(const std::string& name);
std::vector<std::string> builtin_names();

// One additive component of a channel: amp * env(t) * sin(w t + 0.5 k t^2 + phase)
// with env = exp(-decay (t - delay)) on [delay, inf), times sin^2 of the window
// when window > 0 (zero outside [delay, delay + window]).
struct Tone {
  double amp = 0.0;
  double freq = 0.0;
  double chirp = 0.0;
  double phase = 0.0;
  double decay = 0.0;
  double delay = 0.0;
  double window = 0.0;
};

struct InputSignal {
  std::string family;  // decayed_sine, burst, chirp
  double horizon = 0.0;
  std::vector<std::vector<Tone>> channels;
  double l2_norm = 0.0;  // on [0, horizon], fine Simpson quadrature

  int l() const { return static_cast<int>(channels.size()); }
  Vector operator()(double t) const;
  void eval(double t, Vector& out) const;
};

// Families cycle decayed sine, burst, chirp. Signal 0 on channel 0 is
// amplitude * exp(-t) sin(t); the rest depend on the seed.
std::vector<InputSignal> input_ensemble(int l, double horizon, int count, std::uint64_t seed,
                                        double amplitude = 1.0);

double default_horizon(const Matrix& a_bal);

struct GapOptions {
  double tol = 1e-10;
  int grid_intervals = 0;  // 0 picks max(2000, 100 * horizon), rounded to even
  bool with_error = false;
  // Validity monitors, checked at every grid point of both trajectories.
  std::optional<balance::BalancedControlLift> control_lift;
  std::optional<gsvd::GsvdFactor> error_factor;  // state factor of F_err on z
  std::string dump_dir;                            // per-signal CSV when nonempty
};

struct Exclusion {
  int signal = 0;
  std::string reason;
};

struct GainEstimate {
  double value = 0.0;
  std::vector<double> per_signal;  // NaN where excluded
  std::vector<Exclusion> excluded;
  std::string ensemble;
  int count = 0;
  double horizon = 0.0;
};

struct SignalRun {
  std::vector<double> t;
  std::vector<Vector> u;
  std::vector<Vector> y_full;
  std::vector<Vector> y_reduced;
  double error_l2 = 0.0;
  double input_l2 = 0.0;
};

// Full plant x' = f(x, u), y = h(x) against the reduced balanced model, both
// from rest, sampled on a uniform grid.
SignalRun simulate_pair(const ControlSystem& sys, const balance::BalancedNonlinear& bn, const InputSignal& u,
                        const GapOptions& opts);

GainEstimate estimate_gap(const ControlSystem& sys, const balance::BalancedNonlinear& bn,
                          const std::vector<InputSignal>& ensemble, const GapOptions& opts);

enum class Verdict { pass, fail, skipped_small_gain, inconclusive };
std::string to_string(Verdict v);

struct Validation {
  Verdict verdict = Verdict::pass;
  double bound = 0.0;
  double empirical = 0.0;
  double tightness = 0.0;
};

constexpr double kIntegrationCushion = 1e-6;

Validation validate_bound(std::optional<double> bound, const GainEstimate& est);
Validation validate_certificate(const certify::ErrorCertificate& cert, const GainEstimate& est);

// Worker pool capped by KOOPGRAM_THREADS; body(i) for i in [0, count).
// Results must be written by index. The first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);
unsigned worker_count();

}  // namespace koopgram::harness
