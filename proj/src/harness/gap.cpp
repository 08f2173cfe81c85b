#include "koopgram/errors.hpp"
#include "koopgram/harness.hpp"
#include "koopgram/simd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

namespace koopgram::harness {

namespace {

int grid_for(double horizon, int requested) {
  int n = requested > 0 ? requested : std::max(2000, static_cast<int>(std::ceil(100.0 * horizon)));
  return n % 2 ? n + 1 : n;
}

std::vector<double> simpson_weights(int intervals, double h) {
  std::vector<double> w(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) w[i] = (i == 0 || i == intervals ? 1.0 : (i % 2 ? 4.0 : 2.0)) * h / 3.0;
  return w;
}

double l2_distance(const std::vector<double>& w, const std::vector<Vector>& a, const std::vector<Vector>& b) {
  const auto& k = simd::kernels();
  const std::size_t n = w.size();
  const Eigen::Index dims = a.front().size();
  std::vector<double> ca(n), cb(n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < dims; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      ca[i] = a[i](j);
      cb[i] = b.empty() ? 0.0 : b[i](j);
    }
    total += k.weighted_sq_diff(w.data(), ca.data(), cb.data(), n);
  }
  return std::sqrt(std::max(total, 0.0));
}

void write_csv(const std::string& path, const SignalRun& run) {
  std::ofstream os(path);
  if (!os) throw ArtifactError("cannot write " + path, "simulate");
  os << "t";
  for (Eigen::Index j = 0; j < run.u.front().size(); ++j) os << ",u" << j + 1;
  for (Eigen::Index j = 0; j < run.y_full.front().size(); ++j) os << ",y_full" << j + 1;
  for (Eigen::Index j = 0; j < run.y_reduced.front().size(); ++j) os << ",y_red" << j + 1;
  os << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t i = 0; i < run.t.size(); ++i) {
    put(run.t[i]);
    for (const Vector* v : {&run.u[i], &run.y_full[i], &run.y_reduced[i]})
      for (Eigen::Index j = 0; j < v->size(); ++j) {
        os << ',';
        put((*v)(j));
      }
    os << '\n';
  }
}

}  // namespace

SignalRun simulate_pair(const ControlSystem& sys, const balance::BalancedNonlinear& bn, const InputSignal& sig,
                        const GapOptions& opts) {
  if (sig.l() != sys.l) throw ValidationError("simulate: signal has the wrong input dimension");
  const int intervals = grid_for(sig.horizon, opts.grid_intervals);
  const double h = sig.horizon / intervals;
  SignalRun run;
  run.t.resize(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) run.t[i] = i * h;
  run.t.back() = sig.horizon;
  run.u.reserve(run.t.size());
  for (double t : run.t) run.u.push_back(sig(t));

  const auto w = simpson_weights(intervals, h);
  run.input_l2 = l2_distance(w, run.u, {});
  if (!(run.input_l2 > 0.0)) throw ValidationError("simulate: input has zero L2 norm");

  numkernel::OdeOptions o;
  o.rtol = opts.tol;
  o.atol = opts.tol;
  const numkernel::VectorField full = [&](double t, const Vector& x, Vector& dx) {
    Vector u;
    sig.eval(t, u);
    dx = sys.f(x, u);
  };
  const bool with_error = opts.with_error;
  const numkernel::VectorField reduced = [&](double t, const Vector& z, Vector& dz) {
    Vector u;
    sig.eval(t, u);
    dz = bn.reduced_rhs(z, u, with_error);
  };
  const auto xf = numkernel::integrate_ode(full, Vector::Zero(sys.n), 0.0, sig.horizon, o, run.t);
  const auto zr = numkernel::integrate_ode(reduced, Vector::Zero(bn.r()), 0.0, sig.horizon, o, run.t);

  run.y_full.reserve(run.t.size());
  run.y_reduced.reserve(run.t.size());
  for (std::size_t i = 0; i < run.t.size(); ++i) {
    run.y_full.push_back(sys.h(xf.x[i]));
    run.y_reduced.push_back(bn.h_r(zr.x[i]));
    if (opts.control_lift || opts.error_factor) {
      const Vector z = bn.lift(xf.x[i]);
      const Vector ze = bn.embed(zr.x[i]);
      if (opts.control_lift) {
        (*opts.control_lift)(z, run.u[i]);
        (*opts.control_lift)(ze, run.u[i]);
      }
      if (opts.error_factor) {
        opts.error_factor->lift(z);
        opts.error_factor->lift(ze);
      }
    }
  }
  run.error_l2 = l2_distance(w, run.y_full, run.y_reduced);
  return run;
}

GainEstimate estimate_gap(const ControlSystem& sys, const balance::BalancedNonlinear& bn,
                          const std::vector<InputSignal>& ensemble, const GapOptions& opts) {
  if (ensemble.empty()) throw ValidationError("estimate_gap: empty ensemble");
  const std::size_t count = ensemble.size();
  std::vector<double> ratio(count, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> failure(count);
  std::vector<SignalRun> runs(opts.dump_dir.empty() ? 0 : count);

  parallel_for(count, [&](std::size_t i) {
    try {
      SignalRun run = simulate_pair(sys, bn, ensemble[i], opts);
      ratio[i] = run.error_l2 / run.input_l2;
      if (!opts.dump_dir.empty()) runs[i] = std::move(run);
    } catch (const StiffnessError& e) {
      failure[i] = std::string("integration: ") + e.what();
    } catch (const SlackViolation& e) {
      failure[i] = std::string("lifting: ") + e.what();
    } catch (const DomainError& e) {
      failure[i] = std::string("domain: ") + e.what();
    }
  });

  GainEstimate est;
  est.count = static_cast<int>(count);
  est.horizon = ensemble.front().horizon;
  est.ensemble = "decayed_sine/burst/chirp x" + std::to_string(count);
  est.per_signal = ratio;
  for (std::size_t i = 0; i < count; ++i) {
    if (!failure[i].empty()) {
      est.excluded.push_back({static_cast<int>(i), failure[i]});
      continue;
    }
    est.value = std::max(est.value, ratio[i]);
  }
  if (!opts.dump_dir.empty()) {
    std::filesystem::create_directories(opts.dump_dir);
    for (std::size_t i = 0; i < count; ++i)
      if (!runs[i].t.empty()) write_csv(opts.dump_dir + "/signal_" + std::to_string(i) + ".csv", runs[i]);
  }
  return est;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::skipped_small_gain: return "SKIPPED-SMALL-GAIN";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "UNKNOWN";
}

Validation validate_bound(std::optional<double> bound, const GainEstimate& est) {
  Validation v;
  v.empirical = est.value;
  if (!bound) {
    v.verdict = Verdict::skipped_small_gain;
    return v;
  }
  if (!std::isfinite(*bound)) throw std::invalid_argument("validate: bound must be finite");
  v.bound = *bound;
  v.tightness = v.bound > 0.0 ? est.value / v.bound : (est.value > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  if (est.value > v.bound + kIntegrationCushion)
    v.verdict = Verdict::fail;
  else if (!est.excluded.empty())
    v.verdict = Verdict::inconclusive;
  else
    v.verdict = Verdict::pass;
  return v;
}

Validation validate_certificate(const certify::ErrorCertificate& cert, const GainEstimate& est) {
  return validate_bound(cert.applicable_bound(), est);
}

}  // namespace koopgram::harness
