#include "koopgram/errors.hpp"
#include "koopgram/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace koopgram::koopman {

TrajectoryDataset generate_dataset(const ControlSystem& sys, const Dictionary& dict, const DatasetOptions& opts) {
  if (dict.n() != sys.n) throw std::invalid_argument("generate_dataset: dictionary and system dimensions differ");
  if (opts.initial_conditions < 1 || opts.samples_per_trajectory < 1 || !(opts.horizon >= 0.0))
    throw std::invalid_argument("generate_dataset: need at least one trajectory and sample");
  TrajectoryDataset data;
  data.n = sys.n;
  data.options = opts;
  const Vector zero_u = Vector::Zero(sys.l);
  numkernel::VectorField field = [&](double, const Vector& x, Vector& dx) { dx = sys.f(x, zero_u); };
  std::vector<double> times(static_cast<std::size_t>(opts.samples_per_trajectory));
  for (int k = 0; k < opts.samples_per_trajectory; ++k)
    times[k] = opts.samples_per_trajectory == 1 ? 0.0 : opts.horizon * k / (opts.samples_per_trajectory - 1);

  const auto ics = gsvd::sample_points(sys.n, opts.initial_conditions, opts.seed, sys.state_domain);
  for (int i = 0; i < opts.initial_conditions; ++i) {
    auto tr = numkernel::integrate_ode(field, ics[i], 0.0, opts.horizon, opts.tol, times);
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      const Vector& x = tr.x[k];
      data.trajectory.push_back(i);
      data.t.push_back(tr.t[k]);
      data.x.push_back(x);
      data.target.push_back(dict.lie(x, sys.f(x, zero_u)));
    }
  }
  return data;
}

KoopmanModel fit_generator(const Dictionary& dict, const TrajectoryDataset& data, const FitOptions& opts) {
  const int q = dict.q();
  const auto total = static_cast<Eigen::Index>(data.size());
  if (total < 2 * q) throw std::invalid_argument("fit_generator: need at least 2q snapshots");
  if (!(opts.holdout_fraction >= 0.0 && opts.holdout_fraction < 1.0))
    throw std::invalid_argument("fit_generator: holdout fraction must lie in [0, 1)");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(opts.seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto train = static_cast<Eigen::Index>(std::ceil((1.0 - opts.holdout_fraction) * static_cast<double>(total)));
  train = std::clamp<Eigen::Index>(train, q, total);

  Matrix phi(train, q), y(train, q);
  for (Eigen::Index r = 0; r < train; ++r) {
    const auto k = static_cast<std::size_t>(order[r]);
    phi.row(r) = dict.eval(data.x[k]).transpose();
    y.row(r) = data.target[k].transpose();
  }

  KoopmanModel model;
  model.dictionary = dict;
  double ridge = opts.ridge;
  if (ridge < 0.0) ridge = 1e-10 * phi.squaredNorm() / (static_cast<double>(q) * static_cast<double>(train));
  model.ridge = ridge;

  Matrix lhs(train + (ridge > 0.0 ? q : 0), q), rhs(lhs.rows(), q);
  lhs.topRows(train) = phi;
  rhs.topRows(train) = y;
  if (ridge > 0.0) {
    lhs.bottomRows(q) = std::sqrt(ridge) * Matrix::Identity(q, q);
    rhs.bottomRows(q).setZero();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(lhs);
  if (qr.rank() < q)
    throw ConditioningError("fit_generator: regression is rank deficient (rank " + std::to_string(qr.rank()) +
                            " < q = " + std::to_string(q) + "); supply a ridge");
  model.a = qr.solve(rhs).transpose();

  double worst = 0.0;
  const Eigen::Index first_eval = train < total ? train : 0;
  for (Eigen::Index r = first_eval; r < total; ++r) {
    const auto k = static_cast<std::size_t>(order[r]);
    const Vector p = dict.eval(data.x[k]);
    const double np = p.norm();
    if (np == 0.0) continue;
    worst = std::max(worst, (data.target[k] - model.a * p).norm() / np);
  }
  model.residual_gain = worst;
  model.hurwitz = numkernel::is_hurwitz(model.a, 1e-10);
  return model;
}

OutputFit fit_output_matrix(const std::function<Vector(const Vector&)>& h, const Dictionary& dict,
                            const TrajectoryDataset& data) {
  const int q = dict.q();
  const auto total = static_cast<Eigen::Index>(data.size());
  if (total < q) throw std::invalid_argument("fit_output_matrix: need at least q snapshots");
  const Vector h0 = h(data.x[0]);
  Matrix phi(total, q), y(total, h0.size());
  for (Eigen::Index r = 0; r < total; ++r) {
    phi.row(r) = dict.eval(data.x[static_cast<std::size_t>(r)]).transpose();
    y.row(r) = h(data.x[static_cast<std::size_t>(r)]).transpose();
  }
  OutputFit out;
  out.c = Eigen::ColPivHouseholderQR<Matrix>(phi).solve(y).transpose();
  for (Eigen::Index r = 0; r < total; ++r)
    out.max_residual = std::max(out.max_residual, (y.row(r) - phi.row(r) * out.c.transpose()).norm());
  return out;
}

gsvd::Map residual_map(const KoopmanModel& model, const std::function<Vector(const Vector&)>& f0) {
  const Dictionary dict = model.dictionary;
  const Matrix a = model.a;
  return [dict, a, f0](const Vector& phi) -> Vector {
    const Vector x = phi.head(dict.n());
    return dict.lie(x, f0(x)) - a * phi;
  };
}

gsvd::GsvdFactor factor_residual(KoopmanModel& model, const std::function<Vector(const Vector&)>& f0,
                                 const std::vector<Vector>& samples, double slack) {
  if (samples.empty()) throw std::invalid_argument("factor_residual: no samples");
  const int q = model.q();
  const gsvd::Map ferr = residual_map(model, f0);
  const double snap = 1e-12 * (1.0 + numkernel::norm2(model.a));
  gsvd::GainProfile gains;
  gains.source = gsvd::GainSource::sampled_estimate;
  gains.sample_count = static_cast<long>(samples.size());
  gains.coordinate_bounds.assign(static_cast<std::size_t>(q), 0.0);
  for (const auto& x : samples) {
    const Vector phi = model.dictionary.eval(x);
    const double np = phi.norm();
    if (np == 0.0) continue;
    const Vector r = ferr(phi);
    if (!r.allFinite()) throw DomainError("factor_residual: residual is non-finite");
    for (int i = 0; i < q; ++i) gains.coordinate_bounds[i] = std::max(gains.coordinate_bounds[i], std::abs(r(i)) / np);
  }
  for (double& c : gains.coordinate_bounds)
    if (c <= snap) c = 0.0;
  auto factor = gsvd::decompose(ferr, q, gains, slack);
  factor.set_zero_tolerance(10.0 * snap);
  model.error_factor = factor;
  return factor;
}

}  // namespace koopgram::koopman
