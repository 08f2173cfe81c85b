#include "koopgram/balance.hpp"
#include "koopgram/errors.hpp"

#include <limits>

namespace koopgram::balance {

struct BalancedNonlinear::Impl {
  ControlSystem sys;
  koopman::Dictionary dict;
  BalancedRealization bal;
  ReducedRealization red;
};

BalancedNonlinear::BalancedNonlinear(const ControlSystem& sys, const koopman::Dictionary& dict,
                                     const BalancedRealization& bal, const ReducedRealization& red) {
  if (dict.n() != sys.n) throw ValidationError("balanced_nonlinear: dictionary and system dimensions differ");
  if (bal.q() != dict.q()) throw ValidationError("balanced_nonlinear: realization and dictionary sizes differ");
  if (bal.n() != sys.n) throw ValidationError("balanced_nonlinear: recovery map has the wrong state dimension");
  if (red.o.rows() != bal.q()) throw ValidationError("balanced_nonlinear: truncation does not match realization");
  impl_ = std::make_shared<const Impl>(Impl{sys, dict, bal, red});
}

int BalancedNonlinear::q() const { return impl_->bal.q(); }
int BalancedNonlinear::r() const { return impl_->red.r; }
int BalancedNonlinear::n() const { return impl_->sys.n; }
int BalancedNonlinear::l() const { return impl_->sys.l; }
const BalancedRealization& BalancedNonlinear::realization() const { return impl_->bal; }
const ReducedRealization& BalancedNonlinear::reduced() const { return impl_->red; }

Vector BalancedNonlinear::f_full(const Vector& z, const Vector& u) const {
  const Vector x = impl_->bal.r * z;
  return impl_->bal.t * impl_->dict.lie(x, impl_->sys.f(x, u));
}

Vector BalancedNonlinear::f0(const Vector& z) const { return f_full(z, Vector::Zero(l())); }

Vector BalancedNonlinear::f_u(const Vector& z, const Vector& u) const {
  const Vector x = impl_->bal.r * z;
  return impl_->bal.t * impl_->dict.lie(x, impl_->sys.control_part(x, u));
}

Vector BalancedNonlinear::f_error(const Vector& z) const { return f0(z) - impl_->bal.a_bal * z; }

Vector BalancedNonlinear::h_bal(const Vector& z) const { return impl_->bal.c_bal * z; }

Vector BalancedNonlinear::f_projected(const Vector& z, const Vector& u) const {
  return impl_->bal.r_pinv * impl_->sys.f(impl_->bal.r * z, u);
}

Vector BalancedNonlinear::embed(const Vector& zr) const {
  Vector z = Vector::Zero(q());
  z.head(r()) = zr;
  return z;
}

Vector BalancedNonlinear::f_r(const Vector& zr, const Vector& u) const { return f_full(embed(zr), u).head(r()); }
Vector BalancedNonlinear::f0_r(const Vector& zr) const { return f0(embed(zr)).head(r()); }
Vector BalancedNonlinear::f_u_r(const Vector& zr, const Vector& u) const { return f_u(embed(zr), u).head(r()); }
Vector BalancedNonlinear::f_error_r(const Vector& zr) const { return f0_r(zr) - impl_->red.a_r * zr; }
Vector BalancedNonlinear::h_r(const Vector& zr) const { return impl_->red.c_r * zr; }

Vector BalancedNonlinear::reduced_rhs(const Vector& zr, const Vector& u, bool with_error) const {
  const Vector z = embed(zr);
  const Vector x = impl_->bal.r * z;
  const Vector fu = impl_->sys.f(x, u);
  if (with_error) return (impl_->bal.t * impl_->dict.lie(x, fu)).head(r());
  const Vector ctl = impl_->dict.lie(x, fu - impl_->sys.drift(x));
  return impl_->red.a_r * zr + (impl_->bal.t * ctl).head(r());
}

Vector BalancedNonlinear::lift(const Vector& x) const { return impl_->bal.t * impl_->dict.eval(x); }
Vector BalancedNonlinear::recover(const Vector& z) const { return impl_->bal.r * z; }

BalancedControlLift::BalancedControlLift(const BalancedRealization& bal, gsvd::GsvdFactor factor,
                                         BalancedNonlinear bn)
    : t_inv_(bal.t_inv), b_bal_(bal.b_bal), factor_(std::move(factor)), bn_(std::move(bn)) {
  if (factor_.kind() != gsvd::GsvdFactor::Kind::control)
    throw ValidationError("lift_control_to_balanced: factor must be a control factor");
  if (factor_.p() != bal.q() || b_bal_.cols() != factor_.m())
    throw ValidationError("lift_control_to_balanced: factor does not match the realization");
  t_inv_norm_ = numkernel::norm2(t_inv_);
  for (Eigen::Index i = 0; i < factor_.sigma_diag().size(); ++i)
    if (factor_.sigma_diag()(i) > 0.0) sigma_min_ = factor_.sigma_diag()(i);
}

gsvd::Lifted BalancedControlLift::operator()(const Vector& z, const Vector& u) const {
  const Vector fu = bn_.f_u(z, u);
  double clamp = gsvd::kRadicandClamp;
  const double nu = u.norm();
  if (nu > 0.0 && sigma_min_ > 0.0) {
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * t_inv_norm_ *
                         (bn_.f_full(z, u).norm() + bn_.f0(z).norm());
    clamp += 2.0 * noise / (sigma_min_ * nu);
  }
  return factor_.lift_value(t_inv_ * fu, u, bn_.recover(z), u, clamp);
}

Vector BalancedControlLift::apply_b(const Vector& v) const { return b_bal_ * v; }

BalancedControlLift lift_control_to_balanced(const BalancedRealization& bal, const gsvd::GsvdFactor& fu_factor,
                                             const BalancedNonlinear& bn) {
  return BalancedControlLift(bal, fu_factor, bn);
}

}  // namespace koopgram::balance
