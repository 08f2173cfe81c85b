#include "doctest.h"
#include "koopgram/errors.hpp"
#include "koopgram/harness.hpp"
#include "support/oracles.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

using namespace koopgram;
using namespace koopgram::harness;

namespace {

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

struct Linear {
  ControlSystem sys;
  balance::BalancedRealization bal;
  gsvd::GsvdFactor factor;
  koopman::Dictionary dict;
};

Linear linear_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix a = oracle::stable(rng, 4), b = oracle::gaussian(rng, 4, 1), c = oracle::gaussian(rng, 1, 4);
  auto sys = linear_plant(a, b, c);
  auto dict = koopman::Dictionary::identity(4);
  gsvd::TwoArgMap fu;
  fu.n = 4;
  fu.l = 1;
  fu.p = 4;
  fu.eval = [sys](const Vector& x, const Vector& u) { return sys.control_part(x, u); };
  auto factor = gsvd::decompose_control_linear(fu, b);
  auto bal = balance::balance({a, factor.d(), c});
  return {sys, bal, factor, dict};
}

GainEstimate estimate_with(std::vector<double> per, int excluded) {
  GainEstimate e;
  e.per_signal = per;
  for (double v : per)
    if (std::isfinite(v)) e.value = std::max(e.value, v);
  for (int k = 0; k < excluded; ++k) e.excluded.push_back({k, "slack violation"});
  return e;
}

}  // namespace

TEST_CASE("builtin systems are valid and rest at the origin") {
  CHECK(builtin_names().size() == 4);
  for (const auto& sys : builtin_systems()) {
    CAPTURE(sys.name);
    CHECK_NOTHROW(sys.validate());
    CHECK(sys.f(Vector::Zero(sys.n), Vector::Zero(sys.l)).norm() == 0.0);
    CHECK(sys.h(Vector::Zero(sys.n)).norm() == 0.0);
  }
  CHECK_THROWS_AS(builtin_system("nope"), ValidationError);
}

TEST_CASE("slow manifold lifting closes: d/dt x1^2 = -2 x1^2 along the drift") {
  const auto sys = builtin_system("slow_manifold");
  std::mt19937_64 rng(51);
  for (int k = 0; k < 100; ++k) {
    const Vector x = oracle::gaussian_vec(rng, 2);
    const Vector dx = sys.drift(x);
    CHECK(2.0 * x(0) * dx(0) == doctest::Approx(-2.0 * x(0) * x(0)));
  }
}

TEST_CASE("lti6 drift is Hurwitz") {
  const auto sys = builtin_system("lti6");
  Matrix a(6, 6);
  for (int j = 0; j < 6; ++j) a.col(j) = sys.drift(Vector::Unit(6, j));
  CHECK(numkernel::spectral_abscissa(a) == doctest::Approx(-0.5));
}

TEST_CASE("the first ensemble signal is exp(-t) sin t with norm^2 near 1/8") {
  const auto ens = input_ensemble(1, 40.0, 3, 7);
  REQUIRE(ens.size() == 3);
  CHECK(ens[0].family == "decayed_sine");
  for (double t : {0.0, 0.3, 1.0, 5.0}) CHECK(ens[0](t)(0) == doctest::Approx(std::exp(-t) * std::sin(t)));
  const double ref = oracle::simpson([](double t) { return std::exp(-2 * t) * std::sin(t) * std::sin(t); }, 0.0, 40.0,
                                     20000);
  CHECK(ref == doctest::Approx(0.125).epsilon(1e-8));
  CHECK(ens[0].l2_norm * ens[0].l2_norm == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("ensemble norms agree with an independent quadrature") {
  const auto ens = input_ensemble(2, 30.0, 9, 3, 0.5);
  for (const auto& s : ens) {
    CAPTURE(s.family);
    const double ref = oracle::simpson([&](double t) { return s(t).squaredNorm(); }, 0.0, 30.0, 100000);
    CHECK(s.l2_norm == doctest::Approx(std::sqrt(ref)).epsilon(1e-6));
    CHECK(s.l2_norm > 0.0);
  }
  CHECK(ens[1].family == "burst");
  CHECK(ens[2].family == "chirp");
}

TEST_CASE("ensemble is deterministic in the seed and validates its inputs") {
  const auto a = input_ensemble(2, 10.0, 6, 11), b = input_ensemble(2, 10.0, 6, 11), c = input_ensemble(2, 10.0, 6, 12);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k](1.7) == b[k](1.7));
    if (k > 0 && (a[k](1.7) - c[k](1.7)).norm() > 0.0) differs = true;
  }
  CHECK(differs);
  CHECK_THROWS_AS(input_ensemble(1, 0.0, 3, 1), ValidationError);
  CHECK_THROWS_AS(input_ensemble(0, 1.0, 3, 1), ValidationError);
  CHECK_THROWS_AS(input_ensemble(1, 1.0, 0, 1), ValidationError);
}

TEST_CASE("full-order reduced model reproduces the plant") {
  const auto lc = linear_case(52);
  const balance::BalancedNonlinear bn(lc.sys, lc.dict, lc.bal, balance::truncate(lc.bal, 4));
  const double h = default_horizon(lc.bal.a_bal);
  const auto est = estimate_gap(lc.sys, bn, input_ensemble(1, h, 3, 1), {});
  CHECK(est.value <= 1e-6);
  CHECK(est.excluded.empty());
}

TEST_CASE("simulate_pair rejects zero input and matches an RK4 oracle") {
  const auto lc = linear_case(53);
  const balance::BalancedNonlinear bn(lc.sys, lc.dict, lc.bal, balance::truncate(lc.bal, 2));
  auto ens = input_ensemble(1, 10.0, 1, 1);
  InputSignal zero = ens[0];
  for (auto& tone : zero.channels[0]) tone.amp = 0.0;
  zero.l2_norm = 0.0;
  CHECK_THROWS_AS(simulate_pair(lc.sys, bn, zero, {}), ValidationError);

  GapOptions opts;
  opts.grid_intervals = 200;
  const auto run = simulate_pair(lc.sys, bn, ens[0], opts);
  REQUIRE(run.t.size() == 201);
  const oracle::Field field = [&](double t, const Vector& x) { return lc.sys.f(x, ens[0](t)); };
  const Vector x = oracle::rk4(field, Vector::Zero(4), 0.0, 10.0, 20000);
  CHECK((run.y_full.back() - lc.sys.h(x)).norm() <= 1e-7);
}

TEST_CASE("linear truncation gap stays under twice the Hankel tail") {
  const auto lc = linear_case(54);
  const double h = default_horizon(lc.bal.a_bal);
  const auto ens = input_ensemble(1, h, 6, 2);
  for (int r = 1; r <= 3; ++r) {
    const balance::BalancedNonlinear bn(lc.sys, lc.dict, lc.bal, balance::truncate(lc.bal, r));
    const auto est = estimate_gap(lc.sys, bn, ens, {});
    const double bound = 2.0 * lc.bal.hsv.tail(4 - r).sum();
    CHECK(est.value > 0.0);
    CHECK(est.value <= bound + kIntegrationCushion);
    CHECK(est.per_signal.size() == 6);
    CHECK(est.count == 6);
  }
}

TEST_CASE("gap estimation is deterministic and writes per-signal CSV") {
  const auto lc = linear_case(55);
  const balance::BalancedNonlinear bn(lc.sys, lc.dict, lc.bal, balance::truncate(lc.bal, 1));
  const auto ens = input_ensemble(1, 8.0, 3, 4);
  const auto dir = std::filesystem::temp_directory_path() / "koopgram_harness_dump";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  GapOptions opts;
  opts.dump_dir = dir.string();
  const auto a = estimate_gap(lc.sys, bn, ens, opts);
  const auto b = estimate_gap(lc.sys, bn, ens, {});
  CHECK(a.per_signal == b.per_signal);
  std::ifstream in(dir / "signal_0.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("t,u", 0) == 0);
  CHECK(header.find("y_full") != std::string::npos);
  CHECK(header.find("y_red") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("monitors exclude signals that violate the control slack") {
  const auto lc = linear_case(56);
  const balance::BalancedNonlinear bn(lc.sys, lc.dict, lc.bal, balance::truncate(lc.bal, 2));
  gsvd::TwoArgMap fu;
  fu.n = 4;
  fu.l = 1;
  fu.p = 4;
  fu.eval = [sys = lc.sys](const Vector& x, const Vector& u) { return sys.control_part(x, u); };
  const auto small = gsvd::GsvdFactor::from_control_map(fu, lc.factor.u(), 0.5 * lc.factor.sigma_diag(), 1.0);
  GapOptions opts;
  opts.control_lift = balance::lift_control_to_balanced(lc.bal, small, bn);
  const auto est = estimate_gap(lc.sys, bn, input_ensemble(1, 5.0, 2, 1), opts);
  CHECK(est.excluded.size() == 2);
  CHECK(std::isnan(est.per_signal[0]));
  CHECK(validate_bound(1e9, est).verdict == Verdict::inconclusive);

  GapOptions ok;
  ok.control_lift = balance::lift_control_to_balanced(lc.bal, lc.factor, bn);
  CHECK(estimate_gap(lc.sys, bn, input_ensemble(1, 5.0, 2, 1), ok).excluded.empty());
}

TEST_CASE("verdict examples") {
  const auto v = validate_bound(1.0, estimate_with({0.5, 0.2}, 0));
  CHECK(v.verdict == Verdict::pass);
  CHECK(v.tightness == doctest::Approx(0.5));
  CHECK(validate_bound(1.0, estimate_with({1.5}, 0)).verdict == Verdict::fail);
  CHECK(validate_bound(1.0, estimate_with({1.0 + 0.5 * kIntegrationCushion}, 0)).verdict == Verdict::pass);
  CHECK(validate_bound(std::nullopt, estimate_with({1.5}, 0)).verdict == Verdict::skipped_small_gain);
  CHECK(validate_bound(1.0, estimate_with({0.5}, 1)).verdict == Verdict::inconclusive);
  CHECK(validate_bound(1.0, estimate_with({1.5}, 1)).verdict == Verdict::fail);
  CHECK(to_string(Verdict::skipped_small_gain) == "SKIPPED-SMALL-GAIN");
  CHECK(to_string(Verdict::inconclusive) == "INCONCLUSIVE");
}

TEST_CASE("verdicts are monotone in the bound") {
  std::mt19937_64 rng(57);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  for (int k = 0; k < 500; ++k) {
    const auto est = estimate_with({unif(rng)}, 0);
    const double lo = unif(rng), hi = lo + unif(rng);
    if (validate_bound(lo, est).verdict == Verdict::pass) CHECK(validate_bound(hi, est).verdict == Verdict::pass);
    if (validate_bound(hi, est).verdict == Verdict::fail) CHECK(validate_bound(lo, est).verdict == Verdict::fail);
  }
}

TEST_CASE("parallel_for fills every slot and rethrows") {
  setenv("KOOPGRAM_THREADS", "3", 1);
  CHECK(worker_count() <= 3);
  std::vector<int> out(100, -1);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }),
                  std::runtime_error);
  setenv("KOOPGRAM_THREADS", "1", 1);
  CHECK(worker_count() == 1);
  unsetenv("KOOPGRAM_THREADS");
}
