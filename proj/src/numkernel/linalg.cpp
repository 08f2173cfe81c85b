#include "koopgram/errors.hpp"
#include "koopgram/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace koopgram::numkernel {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

void LtiSystem::validate() const {
  if (a.rows() != a.cols()) throw std::invalid_argument("lti: a must be square");
  if (b.rows() != a.rows()) throw std::invalid_argument("lti: b row count must equal state dimension");
  if (c.cols() != a.rows()) throw std::invalid_argument("lti: c column count must equal state dimension");
  require_finite(a, "lti.a");
  require_finite(b, "lti.b");
  require_finite(c, "lti.c");
}

SvdResult svd(const Matrix& m) {
  require_finite(m, "svd");
  if (m.size() == 0) {
    return {Matrix::Identity(m.rows(), m.rows()), Vector(0), Matrix::Identity(m.cols(), m.cols())};
  }
  Eigen::JacobiSVD<Matrix> s(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {s.matrixU(), s.singularValues(), s.matrixV().transpose()};
}

Vector singular_values(const Matrix& m) {
  require_finite(m, "singular_values");
  if (m.size() == 0) return Vector(0);
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

double norm2(const Matrix& m) {
  Vector s = singular_values(m);
  return s.size() ? s(0) : 0.0;
}

double default_pinv_tol(const Matrix& m) {
  return static_cast<double>(std::max(m.rows(), m.cols())) *
         std::numeric_limits<double>::epsilon();
}

Matrix pinv(const Matrix& m, double tol) {
  require_finite(m, "pinv");
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  if (tol < 0.0) tol = default_pinv_tol(m);
  Eigen::JacobiSVD<Matrix> s(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = s.singularValues();
  const double cut = tol * sv(0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  return s.matrixV() * inv.asDiagonal() * s.matrixU().transpose();
}

std::vector<std::complex<double>> eigenvalues(const Matrix& a) {
  require_finite(a, "eigenvalues");
  if (a.rows() != a.cols()) throw std::invalid_argument("eigenvalues: matrix must be square");
  std::vector<std::complex<double>> out;
  if (a.rows() == 0) return out;
  Eigen::EigenSolver<Matrix> es(a, false);
  const auto& ev = es.eigenvalues();
  out.assign(ev.data(), ev.data() + ev.size());
  return out;
}

double spectral_abscissa(const Matrix& a) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& l : eigenvalues(a)) m = std::max(m, l.real());
  return m;
}

bool is_hurwitz(const Matrix& a, double margin) {
  return a.rows() == 0 || spectral_abscissa(a) < -margin;
}

void require_hurwitz(const Matrix& a, const char* what) {
  for (const auto& l : eigenvalues(a)) {
    if (l.real() >= 0.0) {
      std::ostringstream os;
      os.precision(6);
      os << what << ": matrix is not Hurwitz, eigenvalue " << l.real()
         << (l.imag() < 0 ? " - " : " + ") << std::abs(l.imag()) << "i";
      throw SpectrumError(os.str(), l.real(), l.imag());
    }
  }
}

}  // namespace koopgram::numkernel
