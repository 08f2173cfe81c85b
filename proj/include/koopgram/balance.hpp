#pragma once

#include "koopgram/gsvd.hpp"
#include "koopgram/koopman.hpp"
#include "koopgram/numkernel.hpp"
#include "koopgram/system.hpp"

#include <memory>

namespace koopgram::balance {

using numkernel::LtiSystem;

struct Gramians {
  Matrix xc;
  Matrix yo;
};

Gramians gramians(const LtiSystem& sys);

struct BalancedRealization {
  Matrix t;
  Matrix t_inv;
  Vector hsv;  // nonincreasing, positive
  Matrix a_bal;
  Matrix b_bal;
  Matrix c_bal;
  Matrix r;       // n x q, S T^{-1}
  Matrix r_pinv;  // cached
  Matrix xc;
  Matrix yo;

  int q() const { return static_cast<int>(t.rows()); }
  int n() const { return static_cast<int>(r.rows()); }
};

// Square-root balancing. n is the number of leading lifted coordinates that
// are the plant state (n <= 0 means all of them). Rows of T are signed so
// their largest entry is positive. Throws MinimalityError when either Gramian
// has eigenvalues below 1e-10 of its largest.
BalancedRealization balance(const LtiSystem& sys, int n = 0);

struct ReducedRealization {
  int r = 0;
  Matrix o;  // q x q, identity on the leading r coordinates
  Matrix a_r;
  Matrix b_r;
  Matrix c_r;
  Matrix r_r;  // n x r
  Vector hsv_tail;

  double tail_sum() const { return hsv_tail.sum(); }
};

ReducedRealization truncate(const BalancedRealization& bal, int r);

// Nonlinear dynamics in balanced coordinates z = T phi(x).
//
//   F(z, u)   = T D_phi(Rz) f(Rz, u)
//   F_0(z)    = F(z, 0)
//   F_u(z, u) = F(z, u) - F(z, 0)
//   F_err(z)  = F(z, 0) - A~ z
//
// Reduced maps act on z_r through E_r = [I_r; 0] and P_r = [I_r 0]:
// F_r(z_r, u) = P_r F(E_r z_r, u).
class BalancedNonlinear {
 public:
  BalancedNonlinear(const ControlSystem& sys, const koopman::Dictionary& dict, const BalancedRealization& bal,
                    const ReducedRealization& red);

  int q() const;
  int r() const;
  int n() const;
  int l() const;

  Vector f_full(const Vector& z, const Vector& u) const;
  Vector f0(const Vector& z) const;
  Vector f_u(const Vector& z, const Vector& u) const;
  Vector f_error(const Vector& z) const;
  Vector h_bal(const Vector& z) const;
  // R^dagger f(Rz, u), the projection of the plant field onto the lifted space.
  Vector f_projected(const Vector& z, const Vector& u) const;

  Vector f_r(const Vector& zr, const Vector& u) const;
  Vector f0_r(const Vector& zr) const;
  Vector f_u_r(const Vector& zr, const Vector& u) const;
  Vector f_error_r(const Vector& zr) const;
  Vector h_r(const Vector& zr) const;

  // Right-hand side of the reduced model: A~_r z_r + F_{u,r}, plus F_{r,err}
  // when the generator is approximate.
  Vector reduced_rhs(const Vector& zr, const Vector& u, bool with_error) const;

  Vector lift(const Vector& x) const;     // T phi(x)
  Vector recover(const Vector& z) const;  // R z
  Vector embed(const Vector& zr) const;   // E_r z_r

  const BalancedRealization& realization() const;
  const ReducedRealization& reduced() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

// v~(z, u) = Sigma^dagger U^T T^{-1} F_u(z, u) plus the kernel block.
// Throws SlackViolation (witness x = Rz) when Sigma is undersized at (z, u).
// The radicand tolerance widens with the cancellation in F(z, u) - F(z, 0),
// which dominates when |u| is tiny next to the drift.
class BalancedControlLift {
 public:
  BalancedControlLift(const BalancedRealization& bal, gsvd::GsvdFactor factor, BalancedNonlinear bn);

  gsvd::Lifted operator()(const Vector& z, const Vector& u) const;
  // B~ v, which reconstructs F_u.
  Vector apply_b(const Vector& v) const;

 private:
  Matrix t_inv_;
  Matrix b_bal_;
  double t_inv_norm_ = 0.0;
  double sigma_min_ = 0.0;
  gsvd::GsvdFactor factor_;
  BalancedNonlinear bn_;
};

BalancedControlLift lift_control_to_balanced(const BalancedRealization& bal, const gsvd::GsvdFactor& fu_factor,
                                             const BalancedNonlinear& bn);

}  // namespace koopgram::balance
