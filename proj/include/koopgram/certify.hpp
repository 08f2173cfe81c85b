#pragma once

#include "koopgram/balance.hpp"
#include "koopgram/gsvd.hpp"
#include "koopgram/numkernel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace koopgram::certify {

double beta(double lipschitz_u, double sigma_pinv_ut_tinv_norm, double r_pinv_norm, bool control_affine);
double theorem2_bound(double beta, double hinf_gl, const Vector& hsv_tail);
// H-infinity norm of (A, B, I).
double phi_norm(const Matrix& a, const Matrix& b);
// |C0 - I| phi_norm, C0 the zero-row embedding of c (or I embedded when c has
// more rows than columns).
double c_gap(const Matrix& c, double phi_norm);

struct Xi {
  double value = 0.0;
  double loop = 0.0;
  bool bounded = true;
};
Xi xi(double gp_norm, double ge_gain);

struct FeedbackDecomposition {
  double gp_norm = 0.0;
  double ge_gain = 0.0;
  double loop_gain = 0.0;
  bool small_gain_ok = true;
  // |(I - B B^+) D_err| / |D_err|; the error must enter through range(B).
  double range_defect = 0.0;
};

// a, b of the (full or reduced) balanced realization; d_err is the error
// block D~_err (empty when the generator is exact).
FeedbackDecomposition decompose_feedback(const Matrix& a, const Matrix& b, const Matrix& d_err);
FeedbackDecomposition decompose_feedback(const balance::BalancedRealization& bal, const Matrix& d_err);
FeedbackDecomposition decompose_feedback(const balance::ReducedRealization& red, const Matrix& d_err);

enum class Status { finite, unbounded_full, unbounded_reduced, unbounded_both };
std::string to_string(Status s);

struct ErrorCertificate {
  int r = 0;
  bool exact_model = false;
  bool control_affine = false;
  double beta = 0.0;
  double lipschitz_lifted = 0.0;
  double sigma_pinv_ut_tinv_norm = 0.0;
  double t_norm = 0.0;
  double hinf_gi = 0.0;
  double hinf_gl = 0.0;
  double hankel_tail = 0.0;
  double c_gap_full = 0.0;
  double c_gap_reduced = 0.0;
  double xi_full = 0.0;
  double xi_reduced = 0.0;
  double theorem2_core = 0.0;   // 2 (beta |G^I| + tail)
  double theorem2_bound = 0.0;  // 2 (beta |G^L| + tail)
  std::optional<double> theorem3_bound;
  Status status = Status::finite;
  FeedbackDecomposition full;
  FeedbackDecomposition reduced;

  // theorem2_bound for exact generators, theorem3_bound otherwise.
  std::optional<double> applicable_bound() const;
};

ErrorCertificate theorem3_bound(const FeedbackDecomposition& full, const FeedbackDecomposition& reduced,
                                double c_gap_full, double c_gap_reduced, double theorem2_core);

// Largest relative deviation of F_u(z, u) from F_u(0, u) over the samples.
double control_dependence(const balance::BalancedNonlinear& bn, const std::vector<Vector>& z_samples,
                          const std::vector<Vector>& u_probes);
constexpr double kControlAffineTol = 1e-10;

// Factor of F_err on balanced coordinates, gains sampled on the given z and
// on every truncation O_r z of them.
gsvd::GsvdFactor factor_balanced_error(const balance::BalancedNonlinear& bn, const std::vector<Vector>& z_samples,
                                       double slack);

struct CertifyInputs {
  const balance::BalancedRealization* bal = nullptr;
  const balance::ReducedRealization* red = nullptr;
  const gsvd::GsvdFactor* control_factor = nullptr;
  const gsvd::GsvdFactor* error_factor = nullptr;  // null for exact generators
  double lipschitz_lifted = 0.0;
  bool control_affine = false;
};

ErrorCertificate certify_order(const CertifyInputs& in);

}  // namespace koopgram::certify
