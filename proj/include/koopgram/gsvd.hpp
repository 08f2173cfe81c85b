#pragma once

#include "koopgram/numkernel.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

// Generalized SVD of finite-gain maps: f = U Sigma v with v norm-preserving
// and injective. The lifted vector has m = p + dim(argument) entries; the
// first p are the support, the trailing dim(argument) the kernel.

namespace koopgram::gsvd {

using Map = std::function<Vector(const Vector&)>;
using TwoArgFn = std::function<Vector(const Vector& x, const Vector& u)>;

enum class GainSource { user_supplied, sampled_estimate };

struct GainProfile {
  std::vector<double> coordinate_bounds;
  GainSource source = GainSource::user_supplied;
  long sample_count = 0;

  void validate() const;
};

struct TwoArgMap {
  int n = 0;
  int l = 0;
  int p = 0;
  TwoArgFn eval;
  double lipschitz_u = 0.0;
};

// Where gain estimates sample. Points come half from the box [-box, box]^n and
// half from random rays at the listed radii; anything beyond max_norm is pulled
// back onto the ball of that radius.
struct SamplingDomain {
  double box = 5.0;
  std::vector<double> radii{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  double max_norm = std::numeric_limits<double>::infinity();

  static SamplingDomain ball(double radius);
};

std::vector<Vector> sample_points(int dim, long count, std::uint64_t seed, const SamplingDomain& dom);

GainProfile estimate_gains(const Map& f, int n, long sample_budget, std::uint64_t seed,
                           const SamplingDomain& dom = {});
// Gains of fu measured against |u|: x from state_dom (box only), u from input_dom.
GainProfile estimate_control_gains(const TwoArgMap& fu, long sample_budget, std::uint64_t seed,
                                   const SamplingDomain& state_dom, const SamplingDomain& input_dom);

double aggregate_gain_bound(const GainProfile& gains);

struct Lifted {
  Vector v;            // support followed by kernel, length m
  double radicand = 0.0;

  Vector support(int p) const { return v.head(p); }
  Vector kernel(int p) const { return v.tail(v.size() - p); }
};

class GsvdFactor {
 public:
  enum class Kind { state, linear_plus, control };

  // Builds a factor from an explicit sigma diagonal (length p, nonincreasing)
  // and orthogonal U. Most callers want decompose* instead.
  static GsvdFactor from_state_map(Map f, int n, Matrix u, Vector sigma, double slack, Kind kind);
  static GsvdFactor from_control_map(TwoArgMap fu, Matrix u, Vector sigma, double slack);

  Kind kind() const { return kind_; }
  int p() const { return static_cast<int>(sigma_diag_.size()); }
  int m() const { return p() + arg_dim_; }
  int argument_dim() const { return arg_dim_; }
  double slack() const { return slack_; }
  const Matrix& u() const { return u_; }
  const Vector& sigma_diag() const { return sigma_diag_; }
  // Output coordinates whose gain bound is zero must stay below
  // zero_tolerance * (1 + |argument|) in magnitude.
  double zero_tolerance() const { return zero_tol_; }
  void set_zero_tolerance(double tol) { zero_tol_ = tol; }

  Matrix sigma() const;   // p x m rectangular diagonal
  Matrix d() const;       // U * Sigma, p x m

  // Throws SlackViolation when the radicand drops below -1e-12.
  Lifted lift(const Vector& x) const;
  Lifted lift(const Vector& x, const Vector& u) const;
  Vector reconstruct(const Vector& v) const;

  // Lifting from a precomputed map value and the argument it is measured against.
  // clamp is the tolerated negative radicand (kRadicandClamp when negative).
  Lifted lift_value(const Vector& fx, const Vector& arg, const Vector& witness_x,
                    const Vector& witness_u, double clamp = -1.0) const;

 private:
  Kind kind_ = Kind::state;
  int arg_dim_ = 0;
  double slack_ = 1.0;
  double zero_tol_ = 1e-12;
  Matrix u_;
  Vector sigma_diag_;
  Map f_;
  TwoArgMap fu_;
};

constexpr double kDefaultSlack = 1.05;
constexpr double kRadicandClamp = 1e-12;

// sigma_i = slack * sqrt(p) * c_(i), sorted, U the sorting permutation.
GsvdFactor decompose(const Map& f, int n, const GainProfile& gains, double slack = kDefaultSlack);
GsvdFactor decompose_linear_plus(const Map& f, int n, const Vector& sigma_sup);
// As above with an explicit orthogonal left factor (e.g. the U of a linear map).
GsvdFactor decompose_linear_plus(const Map& f, int n, const Vector& sigma_sup, const Matrix& u);
GsvdFactor decompose_control(const TwoArgMap& fu, const GainProfile& gains, double slack = kDefaultSlack);
// fu(x, u) = B u with constant B: U and sigma from the SVD of B (zero-padded
// to length p), no slack.
GsvdFactor decompose_control_linear(const TwoArgMap& fu, const Matrix& b);

// Sorting permutation used by decompose: returns (U, sorted sigma).
std::pair<Matrix, Vector> size_sigma(const GainProfile& gains, double slack);

}  // namespace koopgram::gsvd
