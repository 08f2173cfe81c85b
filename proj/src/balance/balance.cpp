#include "koopgram/balance.hpp"
#include "koopgram/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <string>

namespace koopgram::balance {

namespace {

constexpr double kMinimalityTol = 1e-10;

Matrix sqrt_factor(const Matrix& g, const char* subspace) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()));
  const Vector& ev = es.eigenvalues();
  const double top = ev.size() ? ev(ev.size() - 1) : 0.0;
  int deficient = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (!(ev(i) > kMinimalityTol * top)) ++deficient;
  if (deficient > 0 || top <= 0.0) {
    const int dim = top <= 0.0 ? static_cast<int>(ev.size()) : deficient;
    throw MinimalityError("balance: " + std::string(subspace) + " subspace of dimension " + std::to_string(dim) +
                              " (Gramian eigenvalues below 1e-10 of the largest)",
                          dim);
  }
  Eigen::LLT<Matrix> llt(0.5 * (g + g.transpose()));
  if (llt.info() == Eigen::Success) return llt.matrixL();
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

}  // namespace

Gramians gramians(const LtiSystem& sys) {
  sys.validate();
  numkernel::require_hurwitz(sys.a, "gramians");
  Gramians g;
  g.xc = numkernel::solve_lyapunov(sys.a, sys.b * sys.b.transpose());
  g.yo = numkernel::solve_lyapunov(sys.a.transpose(), sys.c.transpose() * sys.c);
  return g;
}

BalancedRealization balance(const LtiSystem& sys, int n) {
  const Gramians g = gramians(sys);
  const int q = static_cast<int>(sys.states());
  if (n <= 0) n = q;
  if (n > q) throw ValidationError("balance: state dimension exceeds lifted dimension");

  const Matrix lc = sqrt_factor(g.xc, "uncontrollable");
  const Matrix lo = sqrt_factor(g.yo, "unobservable");
  const numkernel::SvdResult s = numkernel::svd(lo.transpose() * lc);
  const Vector& hsv = s.sigma;
  const Vector isq = hsv.cwiseSqrt().cwiseInverse();

  BalancedRealization bal;
  bal.t = isq.asDiagonal() * s.u.transpose() * lo.transpose();
  bal.t_inv = lc * s.vt.transpose() * isq.asDiagonal();
  for (int i = 0; i < q; ++i) {
    Eigen::Index j = 0;
    bal.t.row(i).cwiseAbs().maxCoeff(&j);
    if (bal.t(i, j) < 0.0) {
      bal.t.row(i) *= -1.0;
      bal.t_inv.col(i) *= -1.0;
    }
  }
  bal.hsv = hsv;
  bal.a_bal = bal.t * sys.a * bal.t_inv;
  bal.b_bal = bal.t * sys.b;
  bal.c_bal = sys.c * bal.t_inv;
  bal.r = bal.t_inv.topRows(n);
  bal.r_pinv = numkernel::pinv(bal.r);
  bal.xc = g.xc;
  bal.yo = g.yo;
  return bal;
}

ReducedRealization truncate(const BalancedRealization& bal, int r) {
  const int q = bal.q();
  if (r < 1 || r > q)
    throw ValidationError("truncate: order " + std::to_string(r) + " outside [1, " + std::to_string(q) + "]");
  ReducedRealization red;
  red.r = r;
  red.o = Matrix::Zero(q, q);
  red.o.topLeftCorner(r, r).setIdentity();
  red.a_r = bal.a_bal.topLeftCorner(r, r);
  red.b_r = bal.b_bal.topRows(r);
  red.c_r = bal.c_bal.leftCols(r);
  red.r_r = bal.r.leftCols(r);
  red.hsv_tail = bal.hsv.tail(q - r);
  numkernel::require_hurwitz(red.a_r, "truncate");
  return red;
}

}  // namespace koopgram::balance
