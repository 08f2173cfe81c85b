#include "koopgram/gsvd.hpp"

#include "koopgram/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace koopgram::gsvd {
namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::string describe(const Vector& v) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << ")";
  return os.str();
}

void check_sigma(const Vector& sigma) {
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (!std::isfinite(sigma(i)) || sigma(i) < 0.0)
      throw std::invalid_argument("gsvd: sigma entries must be finite and nonnegative");
    if (i && sigma(i) > sigma(i - 1)) throw std::invalid_argument("gsvd: sigma must be nonincreasing");
  }
}

}  // namespace

void GainProfile::validate() const {
  if (coordinate_bounds.empty()) throw std::invalid_argument("gain profile is empty");
  for (double c : coordinate_bounds)
    if (!std::isfinite(c) || c < 0.0) throw std::invalid_argument("gain bounds must be finite and nonnegative");
}

SamplingDomain SamplingDomain::ball(double radius) {
  SamplingDomain d;
  d.box = radius;
  d.radii.clear();
  for (double r : {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3})
    if (r < radius) d.radii.push_back(r);
  d.radii.push_back(radius);
  d.max_norm = radius;
  return d;
}

std::vector<Vector> sample_points(int dim, long count, std::uint64_t seed, const SamplingDomain& dom) {
  if (dim <= 0) throw std::invalid_argument("sample_points: dimension must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-dom.box, dom.box);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    Vector x(dim);
    if (i % 2 == 0 || dom.radii.empty()) {
      do {
        for (int j = 0; j < dim; ++j) x(j) = box(rng);
      } while (x.norm() == 0.0);
    } else {
      do {
        for (int j = 0; j < dim; ++j) x(j) = normal(rng);
      } while (x.norm() == 0.0);
      x *= dom.radii[static_cast<std::size_t>(i / 2) % dom.radii.size()] / x.norm();
    }
    const double nx = x.norm();
    if (nx > dom.max_norm) x *= dom.max_norm / nx;
    pts.push_back(std::move(x));
  }
  return pts;
}

GainProfile estimate_gains(const Map& f, int n, long sample_budget, std::uint64_t seed,
                           const SamplingDomain& dom) {
  if (sample_budget < 100) throw std::invalid_argument("estimate_gains: sample_budget must be at least 100");
  GainProfile g;
  g.source = GainSource::sampled_estimate;
  g.sample_count = sample_budget;
  for (const auto& x : sample_points(n, sample_budget, seed, dom)) {
    const Vector fx = f(x);
    if (!fx.allFinite()) throw DomainError("estimate_gains: map returned a non-finite value at x=" + describe(x));
    if (g.coordinate_bounds.empty()) g.coordinate_bounds.assign(static_cast<std::size_t>(fx.size()), 0.0);
    if (static_cast<std::size_t>(fx.size()) != g.coordinate_bounds.size())
      throw DomainError("estimate_gains: map output dimension changed between samples");
    const double nx = x.norm();
    for (Eigen::Index i = 0; i < fx.size(); ++i)
      g.coordinate_bounds[i] = std::max(g.coordinate_bounds[i], std::abs(fx(i)) / nx);
  }
  return g;
}

GainProfile estimate_control_gains(const TwoArgMap& fu, long sample_budget, std::uint64_t seed,
                                   const SamplingDomain& state_dom, const SamplingDomain& input_dom) {
  if (sample_budget < 100) throw std::invalid_argument("estimate_control_gains: sample_budget must be at least 100");
  SamplingDomain sd = state_dom;
  sd.radii.clear();
  const auto xs = sample_points(fu.n, sample_budget, seed, sd);
  const auto us = sample_points(fu.l, sample_budget, seed ^ 0x9e3779b97f4a7c15ULL, input_dom);
  GainProfile g;
  g.source = GainSource::sampled_estimate;
  g.sample_count = sample_budget;
  g.coordinate_bounds.assign(static_cast<std::size_t>(fu.p), 0.0);
  for (long k = 0; k < sample_budget; ++k) {
    const Vector v = fu.eval(xs[k], us[k]);
    if (!v.allFinite() || v.size() != fu.p)
      throw DomainError("estimate_control_gains: map returned an invalid value at x=" + describe(xs[k]) +
                        ", u=" + describe(us[k]));
    const double nu = us[k].norm();
    for (int i = 0; i < fu.p; ++i) g.coordinate_bounds[i] = std::max(g.coordinate_bounds[i], std::abs(v(i)) / nu);
  }
  return g;
}

double aggregate_gain_bound(const GainProfile& gains) {
  gains.validate();
  const double cmax = *std::max_element(gains.coordinate_bounds.begin(), gains.coordinate_bounds.end());
  return std::sqrt(static_cast<double>(gains.coordinate_bounds.size())) * cmax;
}

std::pair<Matrix, Vector> size_sigma(const GainProfile& gains, double slack) {
  gains.validate();
  if (!(slack >= 1.0) || !std::isfinite(slack)) throw std::invalid_argument("gsvd: slack must be at least 1");
  const auto p = static_cast<int>(gains.coordinate_bounds.size());
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return gains.coordinate_bounds[a] > gains.coordinate_bounds[b];
  });
  Matrix u = Matrix::Zero(p, p);
  Vector sigma(p);
  const double scale = slack * std::sqrt(static_cast<double>(p));
  for (int k = 0; k < p; ++k) {
    u(order[k], k) = 1.0;
    sigma(k) = scale * gains.coordinate_bounds[order[k]];
  }
  return {u, sigma};
}

GsvdFactor GsvdFactor::from_state_map(Map f, int n, Matrix u, Vector sigma, double slack, Kind kind) {
  if (n <= 0) throw std::invalid_argument("gsvd: argument dimension must be positive");
  if (u.rows() != sigma.size() || u.cols() != sigma.size())
    throw std::invalid_argument("gsvd: U must be p x p with p = len(sigma)");
  check_sigma(sigma);
  GsvdFactor g;
  g.kind_ = kind;
  g.arg_dim_ = n;
  g.slack_ = slack;
  g.u_ = std::move(u);
  g.sigma_diag_ = std::move(sigma);
  g.f_ = std::move(f);
  return g;
}

GsvdFactor GsvdFactor::from_control_map(TwoArgMap fu, Matrix u, Vector sigma, double slack) {
  if (fu.l <= 0 || fu.n <= 0) throw std::invalid_argument("gsvd: control map dimensions must be positive");
  if (u.rows() != sigma.size() || u.cols() != sigma.size() || sigma.size() != fu.p)
    throw std::invalid_argument("gsvd: U must be p x p with p = len(sigma) = fu.p");
  check_sigma(sigma);
  GsvdFactor g;
  g.kind_ = Kind::control;
  g.arg_dim_ = fu.l;
  g.slack_ = slack;
  g.u_ = std::move(u);
  g.sigma_diag_ = std::move(sigma);
  g.fu_ = std::move(fu);
  return g;
}

Matrix GsvdFactor::sigma() const {
  Matrix s = Matrix::Zero(p(), m());
  s.leftCols(p()).diagonal() = sigma_diag_;
  return s;
}

Matrix GsvdFactor::d() const { return u_ * sigma(); }

Vector GsvdFactor::reconstruct(const Vector& v) const {
  if (v.size() != m()) throw std::invalid_argument("gsvd: lifted vector has wrong length");
  return u_ * (sigma_diag_.array() * v.head(p()).array()).matrix();
}

Lifted GsvdFactor::lift_value(const Vector& fx, const Vector& arg, const Vector& witness_x,
                              const Vector& witness_u, double clamp) const {
  if (clamp < 0.0) clamp = kRadicandClamp;
  const int pp = p();
  if (fx.size() != pp) throw std::invalid_argument("gsvd: map value has wrong dimension");
  if (arg.size() != arg_dim_) throw std::invalid_argument("gsvd: argument has wrong dimension");
  if (!fx.allFinite()) throw DomainError("gsvd: map returned a non-finite value");
  Lifted out;
  out.v = Vector::Zero(m());
  const double na = arg.norm();
  const Vector rotated = u_.transpose() * fx;
  const double zero_tol = zero_tol_ * (1.0 + na);

  auto violation = [&](const std::string& why, double rad) {
    std::ostringstream os;
    os << "gsvd: " << why << " at x=" << describe(witness_x);
    if (witness_u.size()) os << ", u=" << describe(witness_u);
    return SlackViolation(os.str(), to_std(witness_x), to_std(witness_u), rad);
  };

  if (na == 0.0) {
    if (rotated.cwiseAbs().maxCoeff() > zero_tol) throw violation("map is nonzero where its argument vanishes", -1.0);
    out.radicand = 1.0;
    return out;
  }
  for (int k = 0; k < pp; ++k) {
    if (sigma_diag_(k) > 0.0) {
      out.v(k) = rotated(k) / sigma_diag_(k);
    } else if (std::abs(rotated(k)) > zero_tol) {
      throw violation("output coordinate with zero gain bound is nonzero", -1.0);
    }
  }
  const double s2 = out.v.head(pp).squaredNorm();
  double rad = (na * na - s2) / (na * na);
  if (rad < 0.0) {
    if (rad < -clamp) {
      std::ostringstream os;
      os.precision(3);
      os << "radicand " << rad << " is negative";
      throw violation(os.str(), rad);
    }
    rad = 0.0;
  }
  out.radicand = rad;
  out.v.tail(arg_dim_) = arg * std::sqrt(rad);
  return out;
}

Lifted GsvdFactor::lift(const Vector& x) const {
  if (kind_ == Kind::control) throw std::logic_error("gsvd: control factor needs (x, u)");
  return lift_value(f_(x), x, x, Vector());
}

Lifted GsvdFactor::lift(const Vector& x, const Vector& u) const {
  if (kind_ != Kind::control) throw std::logic_error("gsvd: state factor takes a single argument");
  return lift_value(fu_.eval(x, u), u, x, u);
}

GsvdFactor decompose(const Map& f, int n, const GainProfile& gains, double slack) {
  auto [u, sigma] = size_sigma(gains, slack);
  return GsvdFactor::from_state_map(f, n, std::move(u), std::move(sigma), slack, GsvdFactor::Kind::state);
}

GsvdFactor decompose_linear_plus(const Map& f, int n, const Vector& sigma_sup) {
  return decompose_linear_plus(f, n, sigma_sup, Matrix::Identity(sigma_sup.size(), sigma_sup.size()));
}

GsvdFactor decompose_linear_plus(const Map& f, int n, const Vector& sigma_sup, const Matrix& u) {
  if ((u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("decompose_linear_plus: U must be orthogonal");
  return GsvdFactor::from_state_map(f, n, u, sigma_sup, 1.0, GsvdFactor::Kind::linear_plus);
}

GsvdFactor decompose_control(const TwoArgMap& fu, const GainProfile& gains, double slack) {
  if (static_cast<int>(gains.coordinate_bounds.size()) != fu.p)
    throw std::invalid_argument("decompose_control: gain profile length must equal fu.p");
  SamplingDomain probe;
  probe.radii.clear();
  const Vector zero_u = Vector::Zero(fu.l);
  for (const auto& x : sample_points(fu.n, 64, 0x5eed, probe)) {
    const Vector v = fu.eval(x, zero_u);
    if (v.size() != fu.p || v.cwiseAbs().maxCoeff() > 1e-12 * (1.0 + x.norm()))
      throw ValidationError("decompose_control: fu(x, 0) must vanish, fails at x=" + describe(x));
  }
  auto [u, sigma] = size_sigma(gains, slack);
  return GsvdFactor::from_control_map(fu, std::move(u), std::move(sigma), slack);
}

GsvdFactor decompose_control_linear(const TwoArgMap& fu, const Matrix& b) {
  if (b.rows() != fu.p || b.cols() != fu.l)
    throw std::invalid_argument("decompose_control_linear: B must be p x l");
  const numkernel::SvdResult s = numkernel::svd(b);
  Vector sigma = Vector::Zero(fu.p);
  sigma.head(s.sigma.size()) = s.sigma;
  return GsvdFactor::from_control_map(fu, s.u, std::move(sigma), 1.0);
}

}  // namespace koopgram::gsvd
