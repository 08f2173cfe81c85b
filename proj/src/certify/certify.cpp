#include "koopgram/certify.hpp"
#include "koopgram/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace koopgram::certify {

namespace {

constexpr double kRangeDefectTol = 1e-8;

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + " must be nonnegative");
}

}  // namespace

double beta(double lipschitz_u, double sigma_pinv_ut_tinv_norm, double r_pinv_norm, bool control_affine) {
  require_nonnegative(lipschitz_u, "beta: lipschitz_u");
  require_nonnegative(sigma_pinv_ut_tinv_norm, "beta: sigma_pinv_ut_tinv_norm");
  require_nonnegative(r_pinv_norm, "beta: r_pinv_norm");
  if (control_affine) return 0.0;
  return lipschitz_u * sigma_pinv_ut_tinv_norm * r_pinv_norm;
}

double theorem2_bound(double beta, double hinf_gl, const Vector& hsv_tail) {
  require_nonnegative(beta, "theorem2_bound: beta");
  require_nonnegative(hinf_gl, "theorem2_bound: hinf");
  if (hsv_tail.size() && hsv_tail.minCoeff() < 0.0) throw std::invalid_argument("theorem2_bound: negative tail");
  return 2.0 * (beta * hinf_gl + hsv_tail.sum());
}

double phi_norm(const Matrix& a, const Matrix& b) {
  numkernel::require_hurwitz(a, "phi_norm");
  return numkernel::hinf_norm({a, b, Matrix::Identity(a.rows(), a.cols())});
}

double c_gap(const Matrix& c, double phi) {
  const Eigen::Index rows = std::max(c.rows(), c.cols());
  Matrix c0 = Matrix::Zero(rows, c.cols());
  c0.topRows(c.rows()) = c;
  Matrix id = Matrix::Zero(rows, c.cols());
  id.topRows(c.cols()).setIdentity();
  return numkernel::norm2(c0 - id) * phi;
}

Xi xi(double gp_norm, double ge_gain) {
  require_nonnegative(gp_norm, "xi: gp_norm");
  require_nonnegative(ge_gain, "xi: ge_gain");
  Xi out;
  out.loop = gp_norm * ge_gain;
  if (out.loop >= 1.0) {
    out.bounded = false;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = gp_norm * gp_norm * ge_gain / (1.0 - out.loop);
  return out;
}

FeedbackDecomposition decompose_feedback(const Matrix& a, const Matrix& b, const Matrix& d_err) {
  FeedbackDecomposition fd;
  fd.gp_norm = phi_norm(a, b);
  if (d_err.size() && d_err.cwiseAbs().maxCoeff() > 0.0) {
    if (d_err.rows() != b.rows()) throw std::invalid_argument("decompose_feedback: error block has wrong row count");
    const Matrix bp = numkernel::pinv(b);
    fd.ge_gain = numkernel::norm2(bp * d_err);
    const Matrix leak = d_err - b * (bp * d_err);
    fd.range_defect = numkernel::norm2(leak) / numkernel::norm2(d_err);
  }
  fd.loop_gain = fd.gp_norm * fd.ge_gain;
  fd.small_gain_ok = fd.loop_gain < 1.0 && fd.range_defect <= kRangeDefectTol;
  return fd;
}

FeedbackDecomposition decompose_feedback(const balance::BalancedRealization& bal, const Matrix& d_err) {
  return decompose_feedback(bal.a_bal, bal.b_bal, d_err);
}

FeedbackDecomposition decompose_feedback(const balance::ReducedRealization& red, const Matrix& d_err) {
  return decompose_feedback(red.a_r, red.b_r, d_err.size() ? Matrix(d_err.topRows(red.r)) : d_err);
}

std::string to_string(Status s) {
  switch (s) {
    case Status::finite: return "finite";
    case Status::unbounded_full: return "unbounded_full";
    case Status::unbounded_reduced: return "unbounded_reduced";
    case Status::unbounded_both: return "unbounded_both";
  }
  return "unknown";
}

std::optional<double> ErrorCertificate::applicable_bound() const {
  if (exact_model) return theorem2_bound;
  return theorem3_bound;
}

ErrorCertificate theorem3_bound(const FeedbackDecomposition& full, const FeedbackDecomposition& reduced,
                                double c_gap_full, double c_gap_reduced, double theorem2_core) {
  ErrorCertificate cert;
  cert.full = full;
  cert.reduced = reduced;
  cert.c_gap_full = c_gap_full;
  cert.c_gap_reduced = c_gap_reduced;
  cert.theorem2_core = theorem2_core;
  const Xi xf = xi(full.gp_norm, full.ge_gain);
  const Xi xr = xi(reduced.gp_norm, reduced.ge_gain);
  const bool ok_full = full.small_gain_ok && xf.bounded;
  const bool ok_red = reduced.small_gain_ok && xr.bounded;
  cert.xi_full = xf.bounded ? xf.value : 0.0;
  cert.xi_reduced = xr.bounded ? xr.value : 0.0;
  if (ok_full && ok_red) {
    cert.status = Status::finite;
    cert.theorem3_bound = c_gap_full + xf.value + theorem2_core + xr.value + c_gap_reduced;
  } else {
    cert.status = !ok_full && !ok_red ? Status::unbounded_both
                  : !ok_full          ? Status::unbounded_full
                                      : Status::unbounded_reduced;
  }
  return cert;
}

double control_dependence(const balance::BalancedNonlinear& bn, const std::vector<Vector>& z_samples,
                          const std::vector<Vector>& u_probes) {
  double worst = 0.0;
  const Vector origin = Vector::Zero(bn.q());
  for (const auto& u : u_probes) {
    const Vector base = bn.f_u(origin, u);
    const double scale = 1.0 + base.norm();
    for (const auto& z : z_samples) worst = std::max(worst, (bn.f_u(z, u) - base).norm() / scale);
  }
  return worst;
}

gsvd::GsvdFactor factor_balanced_error(const balance::BalancedNonlinear& bn, const std::vector<Vector>& z_samples,
                                       double slack) {
  if (z_samples.empty()) throw std::invalid_argument("factor_balanced_error: no samples");
  const int q = bn.q();
  const double snap = 1e-12 * (1.0 + numkernel::norm2(bn.realization().a_bal));
  gsvd::GainProfile gains;
  gains.source = gsvd::GainSource::sampled_estimate;
  gains.coordinate_bounds.assign(static_cast<std::size_t>(q), 0.0);
  for (const auto& z : z_samples) {
    for (int r = q; r >= 1; --r) {
      Vector w = Vector::Zero(q);
      w.head(r) = z.head(r);
      const double nw = w.norm();
      if (nw == 0.0) continue;
      const Vector e = bn.f_error(w);
      if (!e.allFinite()) throw DomainError("factor_balanced_error: error map is non-finite");
      for (int i = 0; i < q; ++i) gains.coordinate_bounds[i] = std::max(gains.coordinate_bounds[i], std::abs(e(i)) / nw);
      ++gains.sample_count;
    }
  }
  for (double& c : gains.coordinate_bounds)
    if (c <= snap) c = 0.0;
  auto factor = gsvd::decompose([bn](const Vector& z) { return bn.f_error(z); }, q, gains, slack);
  factor.set_zero_tolerance(10.0 * snap);
  return factor;
}

ErrorCertificate certify_order(const CertifyInputs& in) {
  if (!in.bal || !in.red || !in.control_factor) throw std::invalid_argument("certify_order: missing inputs");
  const auto& bal = *in.bal;
  const auto& red = *in.red;
  const gsvd::GsvdFactor& cf = *in.control_factor;

  const double tail = red.tail_sum();
  const Matrix spu = numkernel::pinv(cf.sigma()) * cf.u().transpose() * bal.t_inv;
  const double spu_norm = numkernel::norm2(spu);
  const double t_norm = numkernel::norm2(bal.t);
  const double b = beta(in.lipschitz_lifted, spu_norm, t_norm, in.control_affine);
  const double hinf_gl = numkernel::hinf_norm({bal.a_bal, bal.b_bal, bal.c_bal});

  Matrix d_err;
  if (in.error_factor) d_err = in.error_factor->d();
  const FeedbackDecomposition full = decompose_feedback(bal, d_err);
  const FeedbackDecomposition reduced = decompose_feedback(red, d_err);
  const double hinf_gi = full.gp_norm;
  const double core = theorem2_bound(b, hinf_gi, red.hsv_tail);
  const double cg_full = c_gap(bal.c_bal, full.gp_norm);
  const double cg_red = c_gap(red.c_r, reduced.gp_norm);

  ErrorCertificate cert = theorem3_bound(full, reduced, cg_full, cg_red, core);
  cert.r = red.r;
  cert.exact_model = in.error_factor == nullptr;
  cert.control_affine = in.control_affine;
  cert.beta = b;
  cert.lipschitz_lifted = in.lipschitz_lifted;
  cert.sigma_pinv_ut_tinv_norm = spu_norm;
  cert.t_norm = t_norm;
  cert.hinf_gi = hinf_gi;
  cert.hinf_gl = hinf_gl;
  cert.hankel_tail = tail;
  cert.theorem2_bound = theorem2_bound(b, hinf_gl, red.hsv_tail);
  if (cert.exact_model) {
    cert.theorem3_bound = cert.theorem2_bound;
    cert.status = Status::finite;
  }
  return cert;
}

}  // namespace koopgram::certify
