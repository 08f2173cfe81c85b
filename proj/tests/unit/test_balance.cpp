#include "doctest.h"
#include "koopgram/balance.hpp"
#include "koopgram/errors.hpp"
#include "koopgram/harness.hpp"
#include "support/oracles.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

using namespace koopgram;
using namespace koopgram::balance;

namespace {

LtiSystem diag_example() {
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << -1.0, -2.0;
  return {a, Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
}

LtiSystem random_lti(std::mt19937_64& rng, int n, int l, int p) {
  return {oracle::stable(rng, n), oracle::gaussian(rng, n, l), oracle::gaussian(rng, p, n)};
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

ControlSystem linear_plant(const Matrix& a, const Matrix& b, const Matrix& c) {
  ControlSystem s;
  s.name = "linear";
  s.n = static_cast<int>(a.rows());
  s.l = static_cast<int>(b.cols());
  s.p = static_cast<int>(c.rows());
  s.f = [a, b](const Vector& x, const Vector& u) -> Vector { return a * x + b * u; };
  s.h = [c](const Vector& x) -> Vector { return c * x; };
  s.lipschitz_u = b.norm();
  return s;
}

gsvd::TwoArgMap lifted_control(const ControlSystem& sys, const koopman::Dictionary& dict) {
  gsvd::TwoArgMap fu;
  fu.n = sys.n;
  fu.l = sys.l;
  fu.p = dict.q();
  fu.eval = [sys, dict](const Vector& x, const Vector& u) { return dict.lie(x, sys.control_part(x, u)); };
  return fu;
}

struct Pipeline {
  ControlSystem sys;
  koopman::Dictionary dict;
  gsvd::GsvdFactor factor;
  BalancedRealization bal;
  ReducedRealization red;
  BalancedNonlinear bn;
};

// Slow-manifold system with its exact lifting (x1, x2, x1^2).
Pipeline slow_manifold(int r) {
  auto sys = harness::builtin_system("slow_manifold");
  auto dict = koopman::Dictionary::user(2, sys.exact_dictionary);
  Matrix a(3, 3);
  a << -1, 0, 0, 0, -2, 2, 0, 0, -2;
  Matrix c = Matrix::Zero(2, 3);
  c.leftCols(2).setIdentity();
  const auto fu = lifted_control(sys, dict);
  const auto gains = gsvd::estimate_control_gains(fu, 4000, 3, sys.state_domain, sys.input_domain);
  auto factor = gsvd::decompose_control(fu, gains);
  auto bal = balance::balance({a, factor.d(), c}, 2);
  auto red = truncate(bal, r);
  BalancedNonlinear bn(sys, dict, bal, red);
  return {sys, dict, factor, bal, red, bn};
}

}  // namespace

TEST_CASE("gramians of the diagonal example against the closed form b_i b_j / (a_i + a_j)") {
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << -1.0, -2.0;
  Matrix b(2, 1);
  b << 1.0, 1.0;
  const auto g = gramians({a, b, b.transpose()});
  Matrix ref(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) ref(i, j) = b(i) * b(j) / -(a(i, i) + a(j, j));
  CHECK(rel(g.xc, ref) < 1e-14);
  CHECK(rel(g.yo, ref) < 1e-14);
  CHECK(g.xc(0, 0) == doctest::Approx(0.5));
  CHECK(g.xc(1, 1) == doctest::Approx(0.25));

  const auto d = gramians(diag_example());
  Matrix diag = Matrix::Zero(2, 2);
  diag.diagonal() << 0.5, 0.25;
  CHECK(rel(d.xc, diag) < 1e-14);
  CHECK(rel(d.yo, diag) < 1e-14);
}

TEST_CASE("gramians with no input vanish and non-Hurwitz is rejected") {
  auto sys = diag_example();
  sys.b.setZero();
  CHECK(gramians(sys).xc.norm() == 0.0);
  sys.a(0, 0) = 0.5;
  CHECK_THROWS_AS(gramians(sys), SpectrumError);
}

TEST_CASE("gramians of random stable systems match the quadrature oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto sys = random_lti(rng, 4, 2, 2);
    const auto g = gramians(sys);
    const Matrix rc = sys.a * g.xc + g.xc * sys.a.transpose() + sys.b * sys.b.transpose();
    const Matrix ro = sys.a.transpose() * g.yo + g.yo * sys.a + sys.c.transpose() * sys.c;
    CHECK(rc.norm() <= 1e-9 * (sys.b * sys.b.transpose()).norm());
    CHECK(ro.norm() <= 1e-9 * (sys.c.transpose() * sys.c).norm());
    const Matrix ref = oracle::lyapunov_quadrature(sys.a, sys.b * sys.b.transpose(), 80.0, 1600);
    CHECK(rel(g.xc, ref) < 1e-8);
  }
}

TEST_CASE("balance of an already balanced system is the identity") {
  const auto bal = balance::balance(diag_example());
  CHECK(bal.hsv(0) == doctest::Approx(0.5));
  CHECK(bal.hsv(1) == doctest::Approx(0.25));
  CHECK((bal.t - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("balance scalar closed form") {
  Matrix a(1, 1), b(1, 1), c(1, 1);
  a << -1;
  b << 2;
  c << 3;
  const auto bal = balance::balance({a, b, c});
  CHECK(bal.hsv(0) == doctest::Approx(std::sqrt(2.0 * 4.5)));
}

TEST_CASE("balanced Gramians are diag(hsv) on random systems") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 5;
    auto sys = random_lti(rng, n, 1 + trial % 2, 1 + trial % 3);
    const auto bal = balance::balance(sys);
    const Matrix h = bal.hsv.asDiagonal();
    CHECK(rel(bal.t * bal.xc * bal.t.transpose(), h) < 1e-8);
    CHECK(rel(bal.t_inv.transpose() * bal.yo * bal.t_inv, h) < 1e-8);
    CHECK(rel(bal.t * bal.t_inv, Matrix::Identity(n, n)) < 1e-10);
    for (int i = 1; i < n; ++i) CHECK(bal.hsv(i - 1) >= bal.hsv(i));
    CHECK(bal.hsv.minCoeff() > 0.0);
    for (int i = 0; i < n; ++i) {
      Eigen::Index j = 0;
      bal.t.row(i).cwiseAbs().maxCoeff(&j);
      CHECK(bal.t(i, j) > 0.0);
    }
    CHECK(rel(bal.a_bal, bal.t * sys.a * bal.t_inv) < 1e-12);
  }
}

TEST_CASE("hsv match the eigenvalues of Xc Yo from the quadrature oracle") {
  std::mt19937_64 rng(23);
  auto sys = random_lti(rng, 4, 2, 2);
  const auto bal = balance::balance(sys);
  const Matrix xc = oracle::lyapunov_quadrature(sys.a, sys.b * sys.b.transpose(), 80.0, 1600);
  const Matrix yo = oracle::lyapunov_quadrature(sys.a.transpose(), sys.c.transpose() * sys.c, 80.0, 1600);
  Eigen::EigenSolver<Matrix> es(xc * yo);
  std::vector<double> ref;
  for (int i = 0; i < 4; ++i) ref.push_back(std::sqrt(es.eigenvalues()(i).real()));
  std::sort(ref.rbegin(), ref.rend());
  for (int i = 0; i < 4; ++i) CHECK(bal.hsv(i) == doctest::Approx(ref[i]).epsilon(1e-8));
}

TEST_CASE("balance rejects non-minimal realizations") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << -1, -2, -3;
  Matrix b(3, 1);
  b << 1, 1, 0;
  Matrix c = Matrix::Ones(1, 3);
  try {
    balance::balance({a, b, c});
    FAIL("expected MinimalityError");
  } catch (const MinimalityError& e) {
    CHECK(e.deficient_dimension() == 1);
    CHECK(std::string(e.what()).find("uncontrollable") != std::string::npos);
  }
  b << 1, 1, 1;
  c << 1, 0, 0;
  try {
    balance::balance({a, b, c});
    FAIL("expected MinimalityError");
  } catch (const MinimalityError& e) {
    CHECK(e.deficient_dimension() == 2);
    CHECK(std::string(e.what()).find("unobservable") != std::string::npos);
  }
}

TEST_CASE("truncate examples") {
  const auto bal = balance::balance(diag_example());
  const auto full = truncate(bal, 2);
  CHECK(full.hsv_tail.size() == 0);
  CHECK(full.o == Matrix::Identity(2, 2));
  const auto one = truncate(bal, 1);
  CHECK(one.a_r(0, 0) == doctest::Approx(bal.a_bal(0, 0)));
  REQUIRE(one.hsv_tail.size() == 1);
  CHECK(one.hsv_tail(0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(truncate(bal, 0), ValidationError);
  CHECK_THROWS_AS(truncate(bal, 3), ValidationError);

  std::mt19937_64 rng(24);
  const auto b3 = balance::balance(random_lti(rng, 3, 1, 1));
  const auto r1 = truncate(b3, 1);
  Matrix o = Matrix::Zero(3, 3);
  o(0, 0) = 1.0;
  CHECK(r1.o == o);
  CHECK(r1.o * r1.o == r1.o);
  CHECK(r1.r_r.cols() == 1);
}

TEST_CASE("truncations of random minimal systems stay Hurwitz") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 10; ++trial) {
    const auto bal = balance::balance(random_lti(rng, 5, 2, 2));
    for (int r = 1; r <= 5; ++r) CHECK(numkernel::is_hurwitz(truncate(bal, r).a_r));
  }
}

TEST_CASE("reduced LTI reproduces classical balanced truncation of a linear plant") {
  std::mt19937_64 rng(26);
  const auto plant = random_lti(rng, 4, 2, 2);
  const auto sys = linear_plant(plant.a, plant.b, plant.c);
  const auto dict = koopman::Dictionary::identity(4);
  const auto factor = gsvd::decompose_control_linear(lifted_control(sys, dict), plant.b);
  const auto bal = balance::balance({plant.a, factor.d(), plant.c});

  // oracle: quadrature Gramians, balancing from the eigenvectors of Xc Yo
  const Matrix xc = oracle::lyapunov_quadrature(plant.a, plant.b * plant.b.transpose(), 80.0, 1600);
  const Matrix yo = oracle::lyapunov_quadrature(plant.a.transpose(), plant.c.transpose() * plant.c, 80.0, 1600);
  Eigen::EigenSolver<Matrix> es(xc * yo);
  std::vector<int> idx{0, 1, 2, 3};
  std::sort(idx.begin(), idx.end(),
            [&](int i, int j) { return es.eigenvalues()(i).real() > es.eigenvalues()(j).real(); });
  Matrix v(4, 4);
  Vector s(4);
  for (int k = 0; k < 4; ++k) {
    v.col(k) = es.eigenvectors().col(idx[k]).real();
    s(k) = std::sqrt(es.eigenvalues()(idx[k]).real());
  }
  const Matrix vi = v.inverse();
  const Vector w = (vi * xc * vi.transpose()).diagonal();
  const Matrix tinv = v * (w.array() / s.array()).sqrt().matrix().asDiagonal();
  const Matrix t = tinv.inverse();
  for (int k = 0; k < 4; ++k) CHECK(bal.hsv(k) == doctest::Approx(s(k)).epsilon(1e-7));

  for (int r = 1; r <= 3; ++r) {
    const auto red = truncate(bal, r);
    const Matrix br = (bal.t * plant.b).topRows(r);
    const Matrix ao = (t * plant.a * tinv).topLeftCorner(r, r);
    const Matrix bo = (t * plant.b).topRows(r);
    const Matrix co = (plant.c * tinv).leftCols(r);
    for (double om : {0.0, 0.1, 1.0, 10.0})
      CHECK(oracle::sigma_max_at(red.a_r, br, red.c_r, om) ==
            doctest::Approx(oracle::sigma_max_at(ao, bo, co, om)).epsilon(1e-6));
  }
}

TEST_CASE("linear plant with identity dictionary: F(z, u) = A~ z + T B u") {
  std::mt19937_64 rng(27);
  const auto plant = random_lti(rng, 3, 2, 1);
  const auto sys = linear_plant(plant.a, plant.b, plant.c);
  const auto dict = koopman::Dictionary::identity(3);
  const auto factor = gsvd::decompose_control_linear(lifted_control(sys, dict), plant.b);
  const auto bal = balance::balance({plant.a, factor.d(), plant.c});
  const BalancedNonlinear bn(sys, dict, bal, truncate(bal, 2));
  CHECK(bn.f_full(Vector::Zero(3), Vector::Zero(2)).norm() == 0.0);
  for (int k = 0; k < 100; ++k) {
    const Vector z = oracle::gaussian_vec(rng, 3), u = oracle::gaussian_vec(rng, 2);
    const Vector ref = bal.a_bal * z + bal.t * plant.b * u;
    CHECK((bn.f_full(z, u) - ref).norm() <= 1e-12 * (1.0 + ref.norm()));
    CHECK((bn.f_projected(z, u) - ref).norm() <= 1e-11 * (1.0 + ref.norm()));
    CHECK(bn.f_error(z).norm() <= 1e-12 * (1.0 + z.norm()));
  }
}

TEST_CASE("structural identities of the balanced maps on 10^3 samples") {
  const auto p = slow_manifold(2);
  std::mt19937_64 rng(28);
  for (int k = 0; k < 1000; ++k) {
    const Vector z = oracle::gaussian_vec(rng, 3, 0.5);
    const Vector u = oracle::gaussian_vec(rng, 1);
    CHECK(p.bn.f_u(z, Vector::Zero(1)).norm() == 0.0);
    CHECK((p.bn.f0(z) - p.bal.a_bal * z - p.bn.f_error(z)).norm() <= 1e-12 * (1.0 + p.bn.f0(z).norm()));
    const Vector zr = z.head(2);
    CHECK((p.bn.f_r(zr, u) - p.bn.f_full(p.bn.embed(zr), u).head(2)).norm() == 0.0);
    CHECK((p.bn.f0_r(zr) - p.red.a_r * zr - p.bn.f_error_r(zr)).norm() <= 1e-12 * (1.0 + zr.norm()));
    CHECK((p.bn.reduced_rhs(zr, u, true) - p.bn.f_r(zr, u)).norm() <= 1e-12 * (1.0 + zr.norm()));
    CHECK((p.bn.reduced_rhs(zr, u, false) - (p.red.a_r * zr + p.bn.f_u_r(zr, u))).norm() <= 1e-12 * (1.0 + zr.norm()));
  }
}

TEST_CASE("exact lifting: zero error on the lifted manifold and exact recovery") {
  const auto p = slow_manifold(3);
  const auto xs = gsvd::sample_points(2, 500, 29, gsvd::SamplingDomain::ball(1.0));
  for (const auto& x : xs) {
    const Vector z = p.bn.lift(x);
    CHECK(p.bn.f_error(z).norm() <= 1e-12 * (1.0 + z.norm()));
    CHECK((p.bn.recover(z) - x).norm() <= 1e-9 * (1.0 + x.norm()));
  }
  // and along a drift trajectory
  const numkernel::VectorField drift = [&](double, const Vector& x, Vector& dx) { dx = p.sys.drift(x); };
  Vector x0(2);
  x0 << 0.8, -0.4;
  const auto tr = numkernel::integrate_ode(drift, x0, 0.0, 5.0, 1e-10);
  for (const auto& x : tr.x) CHECK((p.bn.recover(p.bn.lift(x)) - x).norm() <= 1e-8);
}

TEST_CASE("balanced control lift: norm preservation and reconstruction") {
  const auto p = slow_manifold(2);
  const auto lift = lift_control_to_balanced(p.bal, p.factor, p.bn);
  const auto xs = gsvd::sample_points(2, 1000, 30, p.sys.state_domain);
  const auto us = gsvd::sample_points(1, 1000, 31, p.sys.input_domain);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Vector z = p.bn.lift(xs[k]);
    const auto v = lift(z, us[k]);
    CHECK(std::abs(v.v.norm() - us[k].norm()) <= 1e-10 * (1.0 + us[k].norm()));
    const Vector fu = p.bn.f_u(z, us[k]);
    CHECK((lift.apply_b(v.v) - fu).norm() <= 1e-9 * (1.0 + fu.norm()));
    CHECK(lift(z, Vector::Zero(1)).v.norm() == 0.0);
  }
}

TEST_CASE("balanced control lift of a control-affine plant does not depend on z") {
  std::mt19937_64 rng(32);
  const auto plant = random_lti(rng, 3, 2, 2);
  const auto sys = linear_plant(plant.a, plant.b, plant.c);
  const auto dict = koopman::Dictionary::identity(3);
  const auto factor = gsvd::decompose_control_linear(lifted_control(sys, dict), plant.b);
  const auto bal = balance::balance({plant.a, factor.d(), plant.c});
  const BalancedNonlinear bn(sys, dict, bal, truncate(bal, 1));
  const auto lift = lift_control_to_balanced(bal, factor, bn);
  const Vector u = oracle::gaussian_vec(rng, 2);
  const Vector v0 = lift(Vector::Zero(3), u).v;
  for (int k = 0; k < 100; ++k) {
    const Vector z = oracle::gaussian_vec(rng, 3);
    CHECK((lift(z, u).v - v0).norm() <= 1e-8 * (1.0 + z.norm()) * u.norm());
  }
}

TEST_CASE("undersized sigma surfaces as a slack violation with witness") {
  auto p = slow_manifold(2);
  const auto fu = lifted_control(p.sys, p.dict);
  const auto small = gsvd::GsvdFactor::from_control_map(fu, p.factor.u(), 0.3 * p.factor.sigma_diag(), 1.0);
  const auto lift = lift_control_to_balanced(p.bal, small, p.bn);
  Vector x(2), u(1);
  x << 0.5, 0.1;
  u << 0.2;
  try {
    lift(p.bn.lift(x), u);
    FAIL("expected SlackViolation");
  } catch (const SlackViolation& e) {
    REQUIRE(e.witness_x().size() == 2);
    CHECK(e.witness_x()[0] == doctest::Approx(0.5));
    CHECK(e.radicand() < 0.0);
  }
}
