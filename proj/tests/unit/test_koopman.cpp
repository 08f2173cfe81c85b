#include "doctest.h"
#include "koopgram/errors.hpp"
#include "koopgram/koopman.hpp"

#include <cmath>

using namespace koopgram;
using namespace koopgram::koopman;

namespace {

ControlSystem make_system(std::string name, int n, std::function<Vector(const Vector&)> drift, double radius) {
  ControlSystem s;
  s.name = std::move(name);
  s.n = n;
  s.l = 1;
  s.p = 1;
  s.f = [drift](const Vector& x, const Vector&) { return drift(x); };
  s.h = [](const Vector& x) { return Vector(x.head(1)); };
  s.state_domain = gsvd::SamplingDomain::ball(radius);
  return s;
}

Vector slow_manifold(const Vector& x) {
  Vector d(2);
  d << -x(0), -2.0 * (x(1) - x(0) * x(0));
  return d;
}

Vector cubic(const Vector& x) { return Vector::Constant(1, -x(0) + 0.1 * x(0) * x(0) * x(0)); }

}  // namespace

TEST_CASE("identity and monomial dictionaries") {
  auto id = build_dictionary(DictionaryKind::identity, 2);
  CHECK(id.q() == 2);
  CHECK(id.labels() == std::vector<std::string>{"x1", "x2"});
  auto m2 = build_dictionary(DictionaryKind::monomials, 2, 2);
  CHECK(m2.labels() == std::vector<std::string>{"x1", "x2", "x1^2", "x1*x2", "x2^2"});
  auto m1 = build_dictionary(DictionaryKind::monomials, 1, 2);
  CHECK(m1.labels() == std::vector<std::string>{"x1", "x1^2"});
  Vector x(2);
  x << 2.0, -3.0;
  Vector phi = m2.eval(x);
  CHECK(phi(2) == 4.0);
  CHECK(phi(3) == -6.0);
  CHECK(phi(4) == 9.0);
  Matrix j = m2.jacobian(x);
  CHECK(j(3, 0) == -3.0);
  CHECK(j(3, 1) == 2.0);
  CHECK(j(4, 1) == -6.0);
  CHECK(build_dictionary(DictionaryKind::monomials, 3, 3).q() == 3 + 6 + 10);
  CHECK_THROWS_AS(build_dictionary(DictionaryKind::monomials, 2, 0), std::invalid_argument);
}

TEST_CASE("monomial jacobian matches finite differences") {
  auto d = Dictionary::monomials(3, 3);
  Vector x(3);
  x << 0.3, -1.2, 0.8;
  Matrix j = d.jacobian(x);
  for (int k = 0; k < 3; ++k) {
    Vector xp = x, xm = x;
    xp(k) += 1e-6;
    xm(k) -= 1e-6;
    CHECK((j.col(k) - (d.eval(xp) - d.eval(xm)) / 2e-6).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("user dictionary validation") {
  auto d = build_dictionary(DictionaryKind::user_supplied, 2, 0, {"x1", "x2", "x1^2"});
  CHECK(d.q() == 3);
  Vector x(2);
  x << 1.5, 2.0;
  CHECK(d.eval(x)(2) == doctest::Approx(2.25));
  CHECK(d.jacobian(x)(2, 0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(Dictionary::user(2, std::vector<std::string>{"x1", "x2", "cos(x1)"}), ValidationError);
  CHECK_THROWS_AS(Dictionary::user(2, std::vector<std::string>{"x2", "x1"}), ValidationError);
  CHECK_THROWS_AS(Dictionary::user(2, std::vector<std::string>{"x1"}), ValidationError);
  CHECK_THROWS_AS(Dictionary::user(2, std::vector<std::string>{"x1", "x2", "u1*x1"}), ValidationError);
}

TEST_CASE("fit linear scalar system exactly") {
  auto sys = make_system("lin", 1, [](const Vector& x) { return Vector(-x); }, 2.0);
  auto dict = Dictionary::identity(1);
  auto data = generate_dataset(sys, dict, {});
  auto model = fit_generator(dict, data);
  CHECK(model.a(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(model.residual_gain <= 1e-10);
  CHECK(model.hurwitz);
}

TEST_CASE("fit slow manifold with exact dictionary against the analytic Lie derivative") {
  auto sys = make_system("sm", 2, slow_manifold, 1.0);
  auto dict = Dictionary::user(2, std::vector<std::string>{"x1", "x2", "x1^2"});
  auto data = generate_dataset(sys, dict, {});
  auto model = fit_generator(dict, data);
  Matrix want(3, 3);
  want << -1, 0, 0, 0, -2, 2, 0, 0, -2;
  CHECK((model.a - want).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(model.residual_gain <= 1e-8);
  CHECK(model.hurwitz);
  // x1*x2 picks up x1^3 under the drift, so degree-2 monomials are not closed.
  auto mono = Dictionary::monomials(2, 2);
  auto model2 = fit_generator(mono, generate_dataset(sys, mono, {}));
  CHECK(model2.residual_gain > 1e-4);
}

TEST_CASE("Van der Pol drift leaves a large residual under the identity dictionary") {
  auto sys = make_system("vdp", 2,
                         [](const Vector& x) {
                           Vector d(2);
                           d << x(1), -x(0) + (1.0 - x(0) * x(0)) * x(1);
                           return d;
                         },
                         2.0);
  auto dict = Dictionary::identity(2);
  DatasetOptions o;
  o.horizon = 3.0;
  auto model = fit_generator(dict, generate_dataset(sys, dict, o));
  CHECK(model.residual_gain > 0.1);
  CHECK_FALSE(model.hurwitz);
}

TEST_CASE("rank-deficient regression without ridge is a conditioning error") {
  auto sys = make_system("lin", 2, [](const Vector& x) { return Vector(-x); }, 1.0);
  auto dict = Dictionary::monomials(2, 1);
  TrajectoryDataset data;
  data.n = 2;
  for (int k = 0; k < 10; ++k) {
    Vector x(2);
    x << 0.1 * (k + 1), 0.2 * (k + 1);
    data.x.push_back(x);
    data.t.push_back(0.0);
    data.trajectory.push_back(k);
    data.target.push_back(-x);
  }
  FitOptions o;
  o.ridge = 0.0;
  CHECK_THROWS_AS(fit_generator(dict, data, o), ConditioningError);
  o.ridge = -1.0;
  CHECK_NOTHROW(fit_generator(dict, data, o));
  TrajectoryDataset tiny = data;
  tiny.x.resize(3);
  tiny.target.resize(3);
  CHECK_THROWS_AS(fit_generator(dict, tiny), std::invalid_argument);
}

TEST_CASE("output matrix fits") {
  auto sys = make_system("sm", 2, slow_manifold, 1.0);
  auto dict = Dictionary::user(2, std::vector<std::string>{"x1", "x2", "x1^2"});
  auto data = generate_dataset(sys, dict, {});
  auto c1 = fit_output_matrix([](const Vector& x) { return Vector(x.head(1)); }, dict, data);
  CHECK((c1.c - (Matrix(1, 3) << 1, 0, 0).finished()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(c1.max_residual <= 1e-10);
  auto c2 = fit_output_matrix([](const Vector& x) { return Vector::Constant(1, x(0) * x(0)); }, dict, data);
  CHECK((c2.c - (Matrix(1, 3) << 0, 0, 1).finished()).cwiseAbs().maxCoeff() <= 1e-10);
  auto id = Dictionary::identity(2);
  auto c3 = fit_output_matrix([](const Vector& x) { return Vector::Constant(1, std::sin(x(0))); }, id,
                              generate_dataset(sys, id, {}));
  CHECK(c3.max_residual > 1e-4);
}

TEST_CASE("factor_residual on exact and approximate models") {
  auto sys = make_system("sm", 2, slow_manifold, 1.0);
  auto f0 = [&](const Vector& x) { return sys.drift(x); };
  auto dict = Dictionary::user(2, std::vector<std::string>{"x1", "x2", "x1^2"});
  auto data = generate_dataset(sys, dict, {});
  auto exact = fit_generator(dict, data);
  auto fe = factor_residual(exact, f0, data.x);
  CHECK(fe.sigma_diag().isZero(0.0));
  CHECK(exact.error_factor.has_value());
  for (std::size_t k = 0; k < data.x.size(); k += 7) {
    auto l = fe.lift(dict.eval(data.x[k]));
    CHECK(std::abs(l.v.norm() - dict.eval(data.x[k]).norm()) <= 1e-10 * (1.0 + l.v.norm()));
  }

  auto csys = make_system("cubic", 1, cubic, 1.0);
  auto id = Dictionary::identity(1);
  auto cdata = generate_dataset(csys, id, {});
  auto approx = fit_generator(id, cdata);
  auto f0c = [&](const Vector& x) { return csys.drift(x); };
  auto samples = gsvd::sample_points(1, 2000, 3, gsvd::SamplingDomain::ball(1.0));
  auto fac = factor_residual(approx, f0c, samples);
  const auto ferr = residual_map(approx, f0c);
  double g = 0.0;
  for (const auto& x : samples) g = std::max(g, ferr(id.eval(x)).norm() / id.eval(x).norm());
  CHECK(fac.sigma_diag().maxCoeff() >= g);
  CHECK(fac.sigma_diag().maxCoeff() <= fac.slack() * std::sqrt(1.0) * g * (1.0 + 1e-12));
  for (const auto& x : gsvd::sample_points(1, 1000, 4, gsvd::SamplingDomain::ball(1.0))) {
    const Vector phi = id.eval(x);
    const auto l = fac.lift(phi);
    const Vector r = ferr(phi);
    CHECK((fac.reconstruct(l.v) - r).norm() <= 1e-10 * (1.0 + r.norm()));
    CHECK((fac.reconstruct(l.v) + approx.a * phi - id.lie(x, f0c(x))).norm() <= 1e-9);
  }
}

TEST_CASE("dataset is deterministic and carries provenance") {
  auto sys = make_system("sm", 2, slow_manifold, 1.0);
  auto dict = Dictionary::identity(2);
  DatasetOptions o;
  o.seed = 42;
  auto a = generate_dataset(sys, dict, o), b = generate_dataset(sys, dict, o);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() == static_cast<std::size_t>(o.initial_conditions * o.samples_per_trajectory));
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.x[k] == b.x[k]);
  CHECK(a.options.seed == 42);
}
