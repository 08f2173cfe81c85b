#pragma once

// Catalogue of finite-gain maps with known factorizations, shared by the gsvd
// unit tests and the acceptance gate.

#include "koopgram/gsvd.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace maps {

using koopgram::Matrix;
using koopgram::Vector;
namespace gsvd = koopgram::gsvd;

struct Case {
  std::string name;
  gsvd::GsvdFactor factor;
  std::vector<Vector> xs;
  std::vector<Vector> us;  // empty for state maps
  gsvd::Map f;
  gsvd::TwoArgFn fu;
};

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Case state_sampled(std::string name, gsvd::Map f, int n, gsvd::SamplingDomain dom, long samples) {
  auto gains = gsvd::estimate_gains(f, n, 4000, 101, dom);
  return {std::move(name), gsvd::decompose(f, n, gains), gsvd::sample_points(n, samples, 202, dom), {}, f, {}};
}

inline Case control_sampled(std::string name, gsvd::TwoArgMap fu, gsvd::SamplingDomain xd,
                            gsvd::SamplingDomain ud, long samples) {
  auto gains = gsvd::estimate_control_gains(fu, 4000, 303, xd, ud);
  xd.radii.clear();
  auto factor = gsvd::decompose_control(fu, gains);
  return {std::move(name), factor, gsvd::sample_points(fu.n, samples, 404, xd),
          gsvd::sample_points(fu.l, samples, 505, ud), {}, fu.eval};
}

inline std::vector<Case> catalogue(long samples = 1000) {
  std::vector<Case> out;
  gsvd::SamplingDomain dflt;

  {
    gsvd::Map f = [](const Vector& x) { return x; };
    auto fac = gsvd::GsvdFactor::from_state_map(f, 1, Matrix::Identity(1, 1), vec({std::sqrt(2.0)}), 1.0,
                                                gsvd::GsvdFactor::Kind::state);
    out.push_back({"identity scalar, sigma sqrt2", fac, gsvd::sample_points(1, samples, 1, dflt), {}, f, {}});
  }
  out.push_back(state_sampled(
      "sin x1, x2/(1+x1^2)",
      [](const Vector& x) { return vec({std::sin(x(0)), x(1) / (1.0 + x(0) * x(0))}); }, 2, dflt, samples));
  {
    Matrix a(2, 2);
    a << 2.0, -1.0, 0.5, 1.5;
    auto s = koopgram::numkernel::svd(a);
    gsvd::Map f = [a](const Vector& x) -> Vector { return a * x; };
    out.push_back({"linear 2x2 with U of A", gsvd::decompose_linear_plus(f, 2, s.sigma, s.u),
                   gsvd::sample_points(2, samples, 2, dflt), {}, f, {}});
  }
  {
    gsvd::Map f = [](const Vector& x) -> Vector {
      const double r = x.norm();
      return r == 0.0 ? Vector(Vector::Zero(x.size())) : Vector(std::tanh(r) * x / r);
    };
    out.push_back({"radial tanh", gsvd::decompose_linear_plus(f, 3, Vector::Ones(3)),
                   gsvd::sample_points(3, samples, 3, dflt), {}, f, {}});
  }
  {
    gsvd::Map f = [](const Vector&) { return Vector(Vector::Zero(2)); };
    out.push_back({"zero map", gsvd::decompose_linear_plus(f, 2, Vector::Zero(2)),
                   gsvd::sample_points(2, samples, 4, dflt), {}, f, {}});
  }
  {
    gsvd::Map f = [](const Vector& x) { return vec({x(0) / (1.0 + x(1) * x(1)), 0.5 * x(1) * std::cos(x(0))}); };
    out.push_back({"diagonal linear-plus", gsvd::decompose_linear_plus(f, 2, vec({1.0, 0.5})),
                   gsvd::sample_points(2, samples, 5, dflt), {}, f, {}});
  }
  out.push_back(state_sampled(
      "3d mixed",
      [](const Vector& x) {
        return vec({std::tanh(x(0)) + 0.5 * std::sin(x(1)), x(2) * std::exp(-x(0) * x(0)),
                    x(0) * x(1) * x(2) / (1.0 + x.squaredNorm())});
      },
      3, dflt, samples));
  out.push_back(state_sampled(
      "sin of coordinate sum", [](const Vector& x) { return vec({std::sin(x.sum())}); }, 3, dflt, samples));
  out.push_back(state_sampled(
      "cubic on unit ball", [](const Vector& x) { return vec({-x(0) + 0.1 * std::pow(x(0), 3)}); }, 1,
      gsvd::SamplingDomain::ball(1.0), samples));

  gsvd::SamplingDomain xbox;
  xbox.radii.clear();
  {
    gsvd::TwoArgMap fu{1, 1, 1, [](const Vector& x, const Vector& u) { return vec({std::cos(x(0)) * std::tanh(u(0))}); }, 1.0};
    out.push_back(control_sampled("cos x tanh u", fu, xbox, dflt, samples));
  }
  {
    Matrix b(2, 2);
    b << 1.0, 0.0, -0.5, 2.0;
    gsvd::TwoArgMap fu{2, 2, 2, [b](const Vector&, const Vector& u) -> Vector { return b * u; }, 2.1};
    out.push_back(control_sampled("affine Bu", fu, xbox, dflt, samples));
  }
  {
    gsvd::TwoArgMap fu{2, 2, 2,
                       [](const Vector& x, const Vector& u) {
                         return vec({std::tanh(u(0)) * std::cos(x(0)),
                                     0.5 * std::sin(u(0) + u(1)) * x(1) / (1.0 + x(1) * x(1))});
                       },
                       1.0};
    out.push_back(control_sampled("coupled control", fu, xbox, dflt, samples));
  }
  return out;
}

}  // namespace maps
