#pragma once

#include "koopgram/gsvd.hpp"
#include "koopgram/numkernel.hpp"

#include <functional>
#include <string>
#include <vector>

namespace koopgram {

// x' = f(x, u), y = h(x)
struct ControlSystem {
  std::string name;
  int n = 0;
  int l = 0;
  int p = 0;
  std::function<Vector(const Vector& x, const Vector& u)> f;
  std::function<Vector(const Vector& x)> h;
  double lipschitz_u = 0.0;
  // Observables (infix expressions in x1..xn) giving an exact lifting, if known.
  std::vector<std::string> exact_dictionary;
  // Region of interest for gain sampling and data generation.
  gsvd::SamplingDomain state_domain;
  gsvd::SamplingDomain input_domain;
  double input_amplitude = 1.0;

  Vector drift(const Vector& x) const { return f(x, Vector::Zero(l)); }
  // f_u(x, u) = f(x, u) - f(x, 0)
  Vector control_part(const Vector& x, const Vector& u) const { return f(x, u) - drift(x); }
  void validate() const;
};

}  // namespace koopgram
