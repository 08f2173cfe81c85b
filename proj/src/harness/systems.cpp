#include "koopgram/errors.hpp"
#include "koopgram/harness.hpp"
#include "koopgram/system.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace koopgram {

void ControlSystem::validate() const {
  if (n < 1 || l < 1 || p < 1) throw std::invalid_argument("system " + name + ": dimensions must be positive");
  if (!f || !h) throw std::invalid_argument("system " + name + ": f and h are required");
  const Vector f00 = f(Vector::Zero(n), Vector::Zero(l));
  if (f00.size() != n) throw ValidationError("system " + name + ": f has wrong output dimension");
  if (f00.norm() > 1e-12) throw ValidationError("system " + name + ": f(0, 0) must vanish");
  const Vector h0 = h(Vector::Zero(n));
  if (h0.size() != p) throw ValidationError("system " + name + ": h has wrong output dimension");
  if (h0.norm() > 1e-12) throw ValidationError("system " + name + ": h(0) must vanish");
  if (!(lipschitz_u >= 0.0) || !std::isfinite(lipschitz_u))
    throw ValidationError("system " + name + ": lipschitz_u must be finite and nonnegative");
}

}  // namespace koopgram

namespace koopgram::harness {

namespace {

ControlSystem lti6() {
  constexpr int n = 6, l = 2, p = 2;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Matrix a(n, n), b(n, l), c(p, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng) / std::sqrt(double(n));
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = g(rng);
  a -= (numkernel::spectral_abscissa(a) + 0.5) * Matrix::Identity(n, n);

  ControlSystem s;
  s.name = "lti6";
  s.n = n;
  s.l = l;
  s.p = p;
  s.f = [a, b](const Vector& x, const Vector& u) -> Vector { return a * x + b * u; };
  s.h = [c](const Vector& x) -> Vector { return c * x; };
  s.lipschitz_u = numkernel::norm2(b);
  s.state_domain = gsvd::SamplingDomain::ball(1.0);
  s.input_domain = gsvd::SamplingDomain::ball(1.0);
  return s;
}

ControlSystem slow_manifold(const std::string& name, double radius, double amplitude) {
  ControlSystem s;
  s.name = name;
  s.n = 2;
  s.l = 1;
  s.p = 2;
  s.f = [](const Vector& x, const Vector& u) -> Vector {
    const double w = std::tanh(u(0));
    Vector d(2);
    d << -x(0) + 0.5 * w, -2.0 * (x(1) - x(0) * x(0)) + std::cos(x(0)) * w;
    return d;
  };
  s.h = [](const Vector& x) -> Vector { return x; };
  s.lipschitz_u = std::sqrt(1.25);
  s.state_domain = gsvd::SamplingDomain::ball(radius);
  s.input_domain = gsvd::SamplingDomain::ball(amplitude);
  s.input_amplitude = amplitude;
  return s;
}

ControlSystem tanh1d() {
  ControlSystem s;
  s.name = "tanh1d";
  s.n = 1;
  s.l = 1;
  s.p = 1;
  s.f = [](const Vector& x, const Vector& u) -> Vector { return Vector::Constant(1, -x(0) + std::tanh(u(0))); };
  s.h = [](const Vector& x) -> Vector { return x; };
  s.lipschitz_u = 1.0;
  s.state_domain = gsvd::SamplingDomain::ball(2.0);
  s.input_domain = gsvd::SamplingDomain::ball(2.0);
  s.input_amplitude = 2.0;
  return s;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"lti6", "slow_manifold", "slow_manifold_identity", "tanh1d"}; }

ControlSystem builtin_system(const std::string& name) {
  if (name == "lti6") return lti6();
  if (name == "slow_manifold") {
    auto s = slow_manifold(name, 1.0, 1.0);
    s.exact_dictionary = {"x1", "x2", "x1^2"};
    return s;
  }
  if (name == "slow_manifold_identity") return slow_manifold(name, 0.1, 0.1);
  if (name == "tanh1d") return tanh1d();
  throw ValidationError("unknown builtin system '" + name + "'");
}

std::vector<ControlSystem> builtin_systems() {
  std::vector<ControlSystem> out;
  for (const auto& n : builtin_names()) out.push_back(builtin_system(n));
  return out;
}

}  // namespace koopgram::harness
