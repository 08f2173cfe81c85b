#pragma once

#include "koopgram/expr.hpp"
#include "koopgram/gsvd.hpp"
#include "koopgram/numkernel.hpp"
#include "koopgram/system.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace koopgram::koopman {

enum class DictionaryKind { identity, monomials, user_supplied };

// State-inclusive observables phi_0 with phi_0(0) = 0.
class Dictionary {
 public:
  static Dictionary identity(int n);
  // All monomials of total degree 1..d, graded, lexicographically descending
  // within each degree.
  static Dictionary monomials(int n, int degree);
  // Throws ValidationError unless phi(0) = 0, the first n observables are the
  // coordinates and the symbolic Jacobian matches central differences.
  static Dictionary user(int n, const std::vector<std::string>& observables);
  static Dictionary user(int n, std::vector<expr::ExprPtr> observables);

  DictionaryKind kind() const { return kind_; }
  int n() const { return n_; }
  int q() const { return static_cast<int>(labels_.size()); }
  int degree() const { return degree_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  Vector eval(const Vector& x) const;
  Matrix jacobian(const Vector& x) const;  // q x n
  // D_phi(x) * dx, the Lie derivative along dx
  Vector lie(const Vector& x, const Vector& dx) const;

 private:
  DictionaryKind kind_ = DictionaryKind::identity;
  int n_ = 0;
  int degree_ = 1;
  std::vector<std::string> labels_;
  std::vector<std::vector<int>> exponents_;           // monomial kinds
  std::vector<expr::ExprPtr> items_;                  // user kind
  std::vector<std::vector<expr::ExprPtr>> jac_items_;
};

Dictionary build_dictionary(DictionaryKind kind, int n, int degree = 1,
                            const std::vector<std::string>& observables = {});

struct DatasetOptions {
  int initial_conditions = 60;
  double horizon = 4.0;
  int samples_per_trajectory = 20;
  double tol = 1e-10;
  std::uint64_t seed = 1;
};

// Snapshots of drift trajectories with Lie-derivative targets.
struct TrajectoryDataset {
  int n = 0;
  std::vector<int> trajectory;
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> target;  // D_phi(x) f(x, 0)
  DatasetOptions options;

  std::size_t size() const { return x.size(); }
};

TrajectoryDataset generate_dataset(const ControlSystem& sys, const Dictionary& dict, const DatasetOptions& opts);

struct FitOptions {
  double ridge = -1.0;  // negative: 1e-10 * trace(Phi^T Phi) / (q * snapshots)
  double holdout_fraction = 0.2;
  std::uint64_t seed = 1;
};

struct KoopmanModel {
  Dictionary dictionary;
  Matrix a;
  Matrix c;
  double residual_gain = 0.0;
  double output_residual = 0.0;
  double ridge = 0.0;
  bool hurwitz = false;
  std::optional<gsvd::GsvdFactor> error_factor;

  int q() const { return dictionary.q(); }
  bool exact(double tol = 1e-8) const { return residual_gain <= tol; }
};

struct OutputFit {
  Matrix c;
  double max_residual = 0.0;
};

KoopmanModel fit_generator(const Dictionary& dict, const TrajectoryDataset& data, const FitOptions& opts = {});
OutputFit fit_output_matrix(const std::function<Vector(const Vector&)>& h, const Dictionary& dict,
                            const TrajectoryDataset& data);

// f_error(phi) = D_phi(x) f0(x) - A phi with x = phi[0:n].
gsvd::Map residual_map(const KoopmanModel& model, const std::function<Vector(const Vector&)>& f0);

// Factors the lifted residual as a map of phi_0 (norm-preserving in phi_0).
// Coordinate gains below 1e-12 (1 + |A|) are snapped to zero.
gsvd::GsvdFactor factor_residual(KoopmanModel& model, const std::function<Vector(const Vector&)>& f0,
                                 const std::vector<Vector>& samples, double slack = gsvd::kDefaultSlack);

}  // namespace koopgram::koopman
