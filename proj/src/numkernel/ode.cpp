#include "koopgram/errors.hpp"
#include "koopgram/numkernel.hpp"
#include "koopgram/simd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace koopgram::numkernel {
namespace {

// Dormand-Prince 5(4) tableau with Hairer's dense-output coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr std::array<double, 1> a2{1.0 / 5};
constexpr std::array<double, 2> a3{3.0 / 40, 9.0 / 40};
constexpr std::array<double, 3> a4{44.0 / 45, -56.0 / 15, 32.0 / 9};
constexpr std::array<double, 4> a5{19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
constexpr std::array<double, 5> a6{9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                                   -5103.0 / 18656};
constexpr std::array<double, 6> a7{35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
                                   11.0 / 84};
constexpr std::array<double, 7> e{71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                                  -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
constexpr std::array<double, 7> d{-12715105075.0 / 11282082432, 0.0,
                                  87487479700.0 / 32700410799, -10690763975.0 / 1880347072,
                                  701980252875.0 / 199316789632, -1453857185.0 / 822651844,
                                  69997945.0 / 29380423};

double initial_step(const VectorField& f, double t0, const Vector& x0, const Vector& f0,
                    const OdeOptions& o, long& evals) {
  const auto n = static_cast<double>(std::max<Eigen::Index>(1, x0.size()));
  const Vector sc = (o.atol + o.rtol * x0.array().abs()).matrix();
  const double d0 = std::sqrt((x0.array() / sc.array()).square().sum() / n);
  const double d1 = std::sqrt((f0.array() / sc.array()).square().sum() / n);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  Vector x1 = x0 + h0 * f0, f1(x0.size());
  f(t0 + h0, x1, f1);
  ++evals;
  const double d2 = std::sqrt(((f1 - f0).array() / sc.array()).square().sum() / n) / h0;
  const double m = std::max(d1, d2);
  const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 1.0 / 5.0);
  return std::min(100.0 * h0, h1);
}

}  // namespace

Trajectory integrate_ode(const VectorField& field, const Vector& x0, double t0, double t1,
                         double tol, const std::vector<double>& sample_times) {
  OdeOptions o;
  o.rtol = tol;
  o.atol = tol;
  return integrate_ode(field, x0, t0, t1, o, sample_times);
}

Trajectory integrate_ode(const VectorField& field, const Vector& x0, double t0, double t1,
                         const OdeOptions& o, const std::vector<double>& sample_times) {
  require_finite(x0, "integrate_ode.x0");
  if (!(t1 >= t0)) throw std::invalid_argument("integrate_ode: t1 must not precede t0");
  if (!(o.rtol > 0.0) || !(o.atol > 0.0)) throw std::invalid_argument("integrate_ode: tolerances must be positive");
  const double span_eps = 1e-12 * std::max({1.0, std::abs(t0), std::abs(t1)});
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] < t0 - span_eps || sample_times[i] > t1 + span_eps)
      throw std::invalid_argument("integrate_ode: sample time outside the integration span");
    if (i && sample_times[i] < sample_times[i - 1])
      throw std::invalid_argument("integrate_ode: sample times must be sorted");
  }

  const auto& kern = simd::kernels();
  const Eigen::Index n = x0.size();
  const auto nz = static_cast<std::size_t>(n);
  const bool dense = !sample_times.empty();
  Trajectory out;
  std::size_t next = 0;

  auto emit = [&](double t, const Vector& x) {
    out.t.push_back(t);
    out.x.push_back(x);
  };

  Vector y = x0;
  if (dense) {
    while (next < sample_times.size() && sample_times[next] <= t0 + span_eps) emit(sample_times[next++], y);
  } else {
    emit(t0, y);
  }
  if (t1 == t0) {
    while (next < sample_times.size()) emit(sample_times[next++], y);
    return out;
  }

  std::array<Vector, 7> k;
  for (auto& v : k) v.resize(n);
  Vector stage(n), ynew(n), err(n);
  std::array<Vector, 5> r;
  for (auto& v : r) v.resize(n);

  field(t0, y, k[0]);
  if (k[0].size() != n) throw std::invalid_argument("integrate_ode: field returned wrong dimension");
  out.evaluations = 1;
  double h = o.initial_step > 0.0 ? o.initial_step : initial_step(field, t0, y, k[0], o, out.evaluations);
  if (o.max_step > 0.0) h = std::min(h, o.max_step);
  const double* kp[7];
  for (int i = 0; i < 7; ++i) kp[i] = k[i].data();
  double t = t0;
  bool last_rejected = false;


  while (t < t1) {
    if (out.accepted + out.rejected >= o.max_steps) {
      std::ostringstream os;
      os << "integrate_ode: step budget exhausted at t=" << t;
      throw StiffnessError(os.str(), t);
    }
    const double h_floor = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1e-300);
    if (h < h_floor) {
      std::ostringstream os;
      os << "integrate_ode: step size underflow at t=" << t << " (h=" << h << ")";
      throw StiffnessError(os.str(), t);
    }
    bool final_step = false;
    if (t + h >= t1) {
      h = t1 - t;
      final_step = true;
    }

    // A field may move-assign into dx, which swaps storage; refresh the
    // stage pointers after every call.
    auto stage_eval = [&](int i, double ti, const Vector& xi) {
      field(ti, xi, k[i]);
      if (k[i].size() != n) throw std::invalid_argument("integrate_ode: field returned wrong dimension");
      kp[i] = k[i].data();
    };
    kern.lincomb(stage.data(), y.data(), h, a2.data(), kp, 1, nz);
    stage_eval(1, t + c2 * h, stage);
    kern.lincomb(stage.data(), y.data(), h, a3.data(), kp, 2, nz);
    stage_eval(2, t + c3 * h, stage);
    kern.lincomb(stage.data(), y.data(), h, a4.data(), kp, 3, nz);
    stage_eval(3, t + c4 * h, stage);
    kern.lincomb(stage.data(), y.data(), h, a5.data(), kp, 4, nz);
    stage_eval(4, t + c5 * h, stage);
    kern.lincomb(stage.data(), y.data(), h, a6.data(), kp, 5, nz);
    stage_eval(5, t + h, stage);
    kern.lincomb(ynew.data(), y.data(), h, a7.data(), kp, 6, nz);
    stage_eval(6, t + h, ynew);
    out.evaluations += 6;

    err.setZero();
    kern.lincomb(err.data(), err.data(), h, e.data(), kp, 7, nz);
    const double en = n ? std::sqrt(kern.scaled_sq_norm(err.data(), y.data(), ynew.data(), o.atol, o.rtol, nz) /
                                    static_cast<double>(n))
                        : 0.0;
    if (!std::isfinite(en)) {
      h *= 0.1;
      ++out.rejected;
      last_rejected = true;
      continue;
    }

    if (en <= 1.0) {
      const double tnew = final_step ? t1 : t + h;
      if (dense) {
        bool built = false;
        while (next < sample_times.size() && sample_times[next] <= tnew + (final_step ? span_eps : 0.0)) {
          if (!built) {
            r[0] = y;
            r[1] = ynew - y;
            r[2] = h * k[0] - r[1];
            r[3] = r[1] - h * k[6] - r[2];
            kern.lincomb(r[4].data(), r[4].setZero().data(), h, d.data(), kp, 7, nz);
            built = true;
          }
          const double th = (sample_times[next] - t) / h, th1 = 1.0 - th;
          emit(sample_times[next], r[0] + th * (r[1] + th1 * (r[2] + th * (r[3] + th1 * r[4]))));
          ++next;
        }
      }
      t = tnew;
      y.swap(ynew);
      k[0].swap(k[6]);
      kp[0] = k[0].data();
      kp[6] = k[6].data();
      ++out.accepted;
      if (!dense) emit(t, y);
      double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (last_rejected) fac = std::min(fac, 1.0);
      h *= fac;
      last_rejected = false;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      ++out.rejected;
      last_rejected = true;
    }
    if (o.max_step > 0.0) h = std::min(h, o.max_step);
    if (!y.allFinite()) {
      std::ostringstream os;
      os << "integrate_ode: state became non-finite at t=" << t;
      throw StiffnessError(os.str(), t);
    }
  }
  while (next < sample_times.size()) emit(sample_times[next++], y);
  return out;
}

}  // namespace koopgram::numkernel
