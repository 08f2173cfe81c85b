#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

namespace koopgram {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace koopgram

namespace koopgram::numkernel {

struct SvdResult {
  Matrix u;
  Vector sigma;  // nonincreasing
  Matrix vt;
};

// Plant with no direct feedthrough.
struct LtiSystem {
  Matrix a;
  Matrix b;
  Matrix c;

  Eigen::Index states() const { return a.rows(); }
  Eigen::Index inputs() const { return b.cols(); }
  Eigen::Index outputs() const { return c.rows(); }
  void validate() const;  // throws std::invalid_argument on bad shapes or non-finite entries
};

void require_finite(const Matrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

SvdResult svd(const Matrix& m);
Vector singular_values(const Matrix& m);
double norm2(const Matrix& m);

// Negative tol selects max(rows, cols) * eps * sigma_max.
Matrix pinv(const Matrix& m, double tol = -1.0);
double default_pinv_tol(const Matrix& m);

std::vector<std::complex<double>> eigenvalues(const Matrix& a);
double spectral_abscissa(const Matrix& a);
bool is_hurwitz(const Matrix& a, double margin = 0.0);
// Throws SpectrumError naming the offending eigenvalue.
void require_hurwitz(const Matrix& a, const char* what);

// Solves A X + X A^T + Q = 0 by Schur back-substitution.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

// sigma_max(C (jw I - A)^{-1} B)
double gain_at(const LtiSystem& sys, double omega);
double hinf_norm(const LtiSystem& sys, double tol = 1e-8);

using VectorField = std::function<void(double t, const Vector& x, Vector& dx)>;

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-8;
  double initial_step = 0.0;  // 0 picks a step from the field scale
  double max_step = 0.0;      // 0 means unbounded
  long max_steps = 2'000'000;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Vector> x;
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

// Dormand-Prince 5(4) with dense output. When sample_times is empty the
// trajectory holds every accepted step; otherwise exactly the requested times
// (which must be sorted and lie in [t0, t1]).
Trajectory integrate_ode(const VectorField& field, const Vector& x0, double t0, double t1,
                         const OdeOptions& opts, const std::vector<double>& sample_times = {});
Trajectory integrate_ode(const VectorField& field, const Vector& x0, double t0, double t1,
                         double tol, const std::vector<double>& sample_times = {});

}  // namespace koopgram::numkernel
