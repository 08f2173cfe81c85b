#include "koopgram/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

namespace koopgram::numkernel {
namespace {

using CMatrix = Eigen::MatrixXcd;

// Largest gain found at imaginary-axis eigenvalues of the Hamiltonian for
// level gamma (and at midpoints between them); negative when there are none.
double crossing_gain(const LtiSystem& sys, double gamma) {
  const Eigen::Index n = sys.states();
  Matrix h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = sys.a;
  h.topRightCorner(n, n) = sys.b * sys.b.transpose() / gamma;
  h.bottomLeftCorner(n, n) = -sys.c.transpose() * sys.c / gamma;
  h.bottomRightCorner(n, n) = -sys.a.transpose();

  Eigen::EigenSolver<Matrix> es(h, false);
  std::vector<double> omegas;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto l = es.eigenvalues()(i);
    if (l.imag() < 0.0) continue;
    if (std::abs(l.real()) <= 1e-6 * std::max(1.0, std::abs(l))) omegas.push_back(l.imag());
  }
  if (omegas.empty()) return -1.0;
  std::sort(omegas.begin(), omegas.end());
  double best = -1.0;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    best = std::max(best, gain_at(sys, omegas[i]));
    if (i + 1 < omegas.size()) best = std::max(best, gain_at(sys, 0.5 * (omegas[i] + omegas[i + 1])));
  }
  return best;
}

std::vector<double> probe_frequencies(const Matrix& a) {
  std::vector<double> w{0.0};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& l : eigenvalues(a)) {
    const double m = std::abs(l);
    if (m > 0.0) {
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    if (l.imag() > 0.0) w.push_back(l.imag());
  }
  if (hi == 0.0) return w;
  const int count = 80;
  const double a0 = std::log10(lo) - 3.0, a1 = std::log10(hi) + 3.0;
  for (int i = 0; i < count; ++i) w.push_back(std::pow(10.0, a0 + (a1 - a0) * i / (count - 1)));
  return w;
}

}  // namespace

double gain_at(const LtiSystem& sys, double omega) {
  const Eigen::Index n = sys.states();
  CMatrix m = -sys.a.cast<std::complex<double>>();
  m.diagonal().array() += std::complex<double>(0.0, omega);
  CMatrix x = m.partialPivLu().solve(sys.b.cast<std::complex<double>>());
  CMatrix g = sys.c.cast<std::complex<double>>() * x;
  if (g.size() == 0 || n == 0) return 0.0;
  return Eigen::JacobiSVD<CMatrix>(g).singularValues()(0);
}

double hinf_norm(const LtiSystem& sys, double tol) {
  sys.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("hinf_norm: tol must be positive");
  require_hurwitz(sys.a, "hinf_norm");
  if (sys.states() == 0 || sys.b.isZero(0.0) || sys.c.isZero(0.0)) return 0.0;

  double lo = 0.0;
  for (double w : probe_frequencies(sys.a)) lo = std::max(lo, gain_at(sys, w));
  if (lo <= 0.0) return 0.0;

  auto raise = [&](double gamma) {
    const double g = crossing_gain(sys, gamma);
    if (g >= gamma * (1.0 - 1e-9)) {
      lo = std::max(lo, g);
      return true;
    }
    return false;
  };

  double hi = 2.0 * lo;
  while (raise(hi)) hi = 2.0 * lo;
  while (hi - lo > tol * lo) {
    const double mid = 0.5 * (lo + hi);
    if (!raise(mid)) hi = mid;
    if (lo > hi) hi = lo * (1.0 + tol);
  }
  return 0.5 * (lo + hi);
}

}  // namespace koopgram::numkernel
