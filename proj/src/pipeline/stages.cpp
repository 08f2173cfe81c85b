#include "koopgram/errors.hpp"
#include "koopgram/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace koopgram::pipeline {

namespace {

constexpr double kLinearControlTol = 1e-10;

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json gains_json(const gsvd::GainProfile& g) {
  return {{"coordinate_bounds", g.coordinate_bounds}, {"sample_count", g.sample_count}};
}

gsvd::GsvdFactor error_factor_from_json(const balance::BalancedNonlinear& bn, const json& j) {
  auto f = gsvd::GsvdFactor::from_state_map([bn](const Vector& z) { return bn.f_error(z); }, bn.q(),
                                            json_matrix(j.at("u")), json_vector(j.at("sigma")),
                                            j.at("slack").get<double>(), gsvd::GsvdFactor::Kind::state);
  f.set_zero_tolerance(j.at("zero_tolerance").get<double>());
  return f;
}

balance::BalancedNonlinear full_nonlinear(const Context& ctx, const balance::BalancedRealization& bal) {
  return balance::BalancedNonlinear(ctx.system, ctx.dictionary, bal, balance::truncate(bal, bal.q()));
}

std::vector<Vector> state_samples(const Context& ctx, std::uint64_t salt) {
  const long count = std::min<long>(ctx.config.sample_budget, 2000);
  return gsvd::sample_points(ctx.system.n, count, ctx.config.seed + salt, ctx.system.state_domain);
}

void require(const json& j, const char* key, const char* stage) {
  if (!j.is_object() || !j.contains(key)) throw ArtifactError(std::string("artifact is missing '") + key + "'", stage);
}

}  // namespace

gsvd::TwoArgMap lifted_control_map(const Context& ctx) {
  gsvd::TwoArgMap fu;
  fu.n = ctx.system.n;
  fu.l = ctx.system.l;
  fu.p = ctx.dictionary.q();
  fu.lipschitz_u = ctx.system.lipschitz_u;
  fu.eval = [sys = ctx.system, dict = ctx.dictionary](const Vector& x, const Vector& u) {
    return dict.lie(x, sys.control_part(x, u));
  };
  return fu;
}

koopman::KoopmanModel model_from_json(const Context& ctx, const json& j) {
  require(j, "a", "fit-koopman");
  if (j.at("labels").get<std::vector<std::string>>() != ctx.dictionary.labels())
    throw ArtifactError("koopman artifact was fitted with a different dictionary", "fit-koopman");
  koopman::KoopmanModel m;
  m.dictionary = ctx.dictionary;
  m.a = json_matrix(j.at("a"));
  m.c = json_matrix(j.at("c"));
  m.residual_gain = j.at("residual_gain").get<double>();
  m.output_residual = j.at("output_residual").get<double>();
  m.ridge = j.at("ridge").get<double>();
  m.hurwitz = j.at("hurwitz").get<bool>();
  return m;
}

gsvd::GsvdFactor control_factor_from_json(const Context& ctx, const json& j) {
  require(j, "sigma", "decompose");
  return gsvd::GsvdFactor::from_control_map(lifted_control_map(ctx), json_matrix(j.at("u")), json_vector(j.at("sigma")),
                                            j.at("slack").get<double>());
}

FitArtifacts stage_fit_koopman(const Context& ctx) {
  const auto& sys = ctx.system;
  koopman::DatasetOptions dopt;
  dopt.seed = ctx.config.seed;
  const auto data = koopman::generate_dataset(sys, ctx.dictionary, dopt);
  koopman::FitOptions fopt;
  fopt.seed = ctx.config.seed;
  auto model = koopman::fit_generator(ctx.dictionary, data, fopt);
  const auto out = koopman::fit_output_matrix(sys.h, ctx.dictionary, data);

  FitArtifacts art;
  art.koopman = {{"system", sys.name},
                 {"n", sys.n},
                 {"q", model.q()},
                 {"labels", ctx.dictionary.labels()},
                 {"a", matrix_json(model.a)},
                 {"c", matrix_json(out.c)},
                 {"residual_gain", model.residual_gain},
                 {"output_residual", out.max_residual},
                 {"ridge", model.ridge},
                 {"hurwitz", model.hurwitz},
                 {"exact", model.exact()},
                 {"snapshots", data.size()}};
  art.dataset = {{"n", sys.n},
                 {"snapshots", data.size()},
                 {"initial_conditions", dopt.initial_conditions},
                 {"horizon", dopt.horizon},
                 {"samples_per_trajectory", dopt.samples_per_trajectory},
                 {"tol", dopt.tol},
                 {"seed", dopt.seed},
                 {"csv", "dataset.csv"}};
  std::ostringstream csv;
  csv << "t";
  for (int i = 1; i <= sys.n; ++i) csv << ",x" << i;
  csv << '\n';
  for (std::size_t k = 0; k < data.size(); ++k) {
    csv << fmt(data.t[k]);
    for (int i = 0; i < sys.n; ++i) csv << ',' << fmt(data.x[k](i));
    csv << '\n';
  }
  art.dataset_csv = csv.str();
  return art;
}

json stage_decompose(const Context& ctx, const json& koopman) {
  model_from_json(ctx, koopman);
  const auto& sys = ctx.system;
  const auto fu = lifted_control_map(ctx);
  Matrix b_bar(fu.p, fu.l);
  for (int j = 0; j < fu.l; ++j) b_bar.col(j) = fu.eval(Vector::Zero(fu.n), Vector::Unit(fu.l, j));

  bool linear = true;
  const auto xs = gsvd::sample_points(fu.n, 200, ctx.config.seed + 17, sys.state_domain);
  const auto us = gsvd::sample_points(fu.l, 200, ctx.config.seed + 18, sys.input_domain);
  for (std::size_t k = 0; k < xs.size() && linear; ++k) {
    const Vector v = fu.eval(xs[k], us[k]);
    linear = (v - b_bar * us[k]).norm() <= kLinearControlTol * (1.0 + v.norm());
  }

  json out;
  if (linear) {
    const auto factor = gsvd::decompose_control_linear(fu, b_bar);
    out = {{"kind", "linear"},
           {"b_bar", matrix_json(b_bar)},
           {"u", matrix_json(factor.u())},
           {"sigma", vector_json(factor.sigma_diag())},
           {"slack", factor.slack()},
           {"lipschitz_lifted", numkernel::norm2(b_bar)},
           {"gains", nullptr}};
  } else {
    const auto gains =
        gsvd::estimate_control_gains(fu, ctx.config.sample_budget, ctx.config.seed, sys.state_domain, sys.input_domain);
    const auto factor = gsvd::decompose_control(fu, gains, ctx.config.slack);
    const bool identity = ctx.dictionary.kind() == koopman::DictionaryKind::identity;
    out = {{"kind", "sampled"},
           {"u", matrix_json(factor.u())},
           {"sigma", vector_json(factor.sigma_diag())},
           {"slack", factor.slack()},
           {"lipschitz_lifted",
            identity ? sys.lipschitz_u : ctx.config.slack * gsvd::aggregate_gain_bound(gains)},
           {"gains", gains_json(gains)}};
  }
  out["q"] = fu.p;
  out["l"] = fu.l;
  return out;
}

json stage_balance(const Context& ctx, const json& koopman, const json& decompose) {
  const auto model = model_from_json(ctx, koopman);
  const auto cf = control_factor_from_json(ctx, decompose);
  const numkernel::LtiSystem gl{model.a, cf.d(), model.c};
  const auto bal = balance::balance(gl, ctx.system.n);
  json out = realization_json(bal);
  out["lti"] = lti_json(gl);
  return out;
}

json stage_certify(const Context& ctx, const json& koopman, const json& decompose, const json& balanced) {
  require(balanced, "t", "balance");
  const auto model = model_from_json(ctx, koopman);
  const auto cf = control_factor_from_json(ctx, decompose);
  const auto bal = realization_from_json(balanced);
  const auto bn = full_nonlinear(ctx, bal);

  std::vector<Vector> zs;
  for (const auto& x : state_samples(ctx, 31)) zs.push_back(bn.lift(x));
  std::vector<Vector> probes;
  for (int j = 0; j < ctx.system.l; ++j) probes.push_back(ctx.system.input_amplitude * Vector::Unit(ctx.system.l, j));
  for (const auto& u : gsvd::sample_points(ctx.system.l, 4, ctx.config.seed + 32, ctx.system.input_domain))
    if (u.norm() > 0.0) probes.push_back(u);
  const double dependence = certify::control_dependence(bn, zs, probes);
  const bool affine = dependence < certify::kControlAffineTol;

  const bool exact = model.exact();
  std::optional<gsvd::GsvdFactor> ef;
  json ef_json = nullptr;
  if (!exact) {
    ef = certify::factor_balanced_error(bn, zs, ctx.config.slack);
    ef_json = {{"u", matrix_json(ef->u())},
               {"sigma", vector_json(ef->sigma_diag())},
               {"slack", ef->slack()},
               {"zero_tolerance", ef->zero_tolerance()}};
  }

  const auto orders = orders_for(ctx, bal.q());
  std::vector<json> certs(orders.size());
  const double lipschitz = decompose.at("lipschitz_lifted").get<double>();
  harness::parallel_for(orders.size(), [&](std::size_t i) {
    const auto red = balance::truncate(bal, orders[i]);
    certify::CertifyInputs in;
    in.bal = &bal;
    in.red = &red;
    in.control_factor = &cf;
    in.error_factor = ef ? &*ef : nullptr;
    in.lipschitz_lifted = lipschitz;
    in.control_affine = affine;
    certs[i] = certificate_json(certify::certify_order(in));
  });

  return {{"control_dependence", dependence},
          {"control_affine", affine},
          {"exact_model", exact},
          {"residual_gain", model.residual_gain},
          {"error_factor", ef_json},
          {"provenance",
           {{"seed", ctx.config.seed}, {"slack", ctx.config.slack}, {"sample_budget", ctx.config.sample_budget}}},
          {"certificates", certs}};
}

json stage_simulate(const Context& ctx, const json& koopman, const json& decompose, const json& balanced,
                    const json& certificate) {
  require(balanced, "t", "balance");
  require(certificate, "certificates", "certify");
  model_from_json(ctx, koopman);
  const auto cf = control_factor_from_json(ctx, decompose);
  const auto bal = realization_from_json(balanced);
  const bool exact = certificate.at("exact_model").get<bool>();
  const double horizon = ctx.config.ensemble.horizon > 0.0 ? ctx.config.ensemble.horizon
                                                           : harness::default_horizon(bal.a_bal);
  const double amplitude =
      ctx.config.ensemble.amplitude > 0.0 ? ctx.config.ensemble.amplitude : ctx.system.input_amplitude;
  const auto ensemble =
      harness::input_ensemble(ctx.system.l, horizon, ctx.config.ensemble.count, ctx.config.seed, amplitude);

  json estimates = json::array();
  for (const auto& c : certificate.at("certificates")) {
    const int r = c.at("r").get<int>();
    const auto red = balance::truncate(bal, r);
    const balance::BalancedNonlinear bn(ctx.system, ctx.dictionary, bal, red);
    harness::GapOptions opts;
    opts.with_error = !exact;
    opts.control_lift = balance::lift_control_to_balanced(bal, cf, bn);
    if (!exact) opts.error_factor = error_factor_from_json(bn, certificate.at("error_factor"));
    json e = gain_estimate_json(harness::estimate_gap(ctx.system, bn, ensemble, opts));
    e["r"] = r;
    estimates.push_back(std::move(e));
  }
  return {{"horizon", horizon}, {"amplitude", amplitude}, {"count", ctx.config.ensemble.count},
          {"with_error", !exact}, {"estimates", estimates}};
}

json stage_report(const Context& ctx, const json& koopman, const json& balanced, const json& certificate,
                  const json& gains) {
  require(koopman, "a", "fit-koopman");
  require(balanced, "hsv", "balance");
  require(certificate, "certificates", "certify");
  require(gains, "estimates", "simulate");
  const auto& certs = certificate.at("certificates");
  const auto& ests = gains.at("estimates");
  if (certs.size() != ests.size()) throw ArtifactError("certificate and gain estimate orders differ", "simulate");

  const Vector hsv = json_vector(balanced.at("hsv"));
  json rows = json::array();
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const auto& c = certs[i];
    const auto& e = ests[i];
    const int r = c.at("r").get<int>();
    if (e.at("r").get<int>() != r) throw ArtifactError("certificate and gain estimate orders differ", "simulate");
    harness::GainEstimate est;
    est.value = e.at("value").get<double>();
    for (const auto& x : e.at("excluded")) est.excluded.push_back({x.at("signal").get<int>(), x.at("reason")});
    const bool exact = c.at("exact_model").get<bool>();
    std::optional<double> bound;
    const json& t3 = c.at("theorem3_bound");
    if (exact)
      bound = c.at("theorem2_bound").get<double>();
    else if (!t3.is_null())
      bound = t3.get<double>();
    const auto v = harness::validate_bound(bound, est);
    rows.push_back({{"r", r},
                    {"hsv_tail", vector_json(hsv.tail(hsv.size() - r))},
                    {"hankel_tail", c.at("hankel_tail")},
                    {"beta", c.at("beta")},
                    {"theorem2", c.at("theorem2_bound")},
                    {"theorem3", t3},
                    {"status", c.at("status")},
                    {"ge_gain", c.at("full").at("ge_gain")},
                    {"loop_gain_full", c.at("full").at("loop_gain")},
                    {"loop_gain_reduced", c.at("reduced").at("loop_gain")},
                    {"small_gain_full", c.at("full").at("small_gain_ok")},
                    {"small_gain_reduced", c.at("reduced").at("small_gain_ok")},
                    {"empirical", est.value},
                    {"excluded", est.excluded.size()},
                    {"verdict", harness::to_string(v.verdict)},
                    {"tightness", v.verdict == harness::Verdict::skipped_small_gain ? json(nullptr) : json(v.tightness)}});
  }
  return {{"system", ctx.system.name},
          {"dictionary", ctx.dictionary.labels()},
          {"q", koopman.at("q")},
          {"hsv", balanced.at("hsv")},
          {"residual_gain", koopman.at("residual_gain")},
          {"exact_model", certificate.at("exact_model")},
          {"control_affine", certificate.at("control_affine")},
          {"seed", ctx.config.seed},
          {"slack", ctx.config.slack},
          {"sample_budget", ctx.config.sample_budget},
          {"ensemble", {{"count", gains.at("count")}, {"horizon", gains.at("horizon")}, {"amplitude", gains.at("amplitude")}}},
          {"rows", rows}};
}

std::string report_csv(const json& report) {
  std::ostringstream os;
  os << "r,hankel_tail,beta,theorem2,theorem3,status,empirical,verdict,tightness\n";
  auto num = [](const json& v) { return v.is_number() ? fmt(v.get<double>()) : std::string(); };
  for (const auto& row : report.at("rows")) {
    os << row.at("r").get<int>() << ',' << num(row.at("hankel_tail")) << ',' << num(row.at("beta")) << ','
       << num(row.at("theorem2")) << ',' << num(row.at("theorem3")) << ',' << row.at("status").get<std::string>() << ','
       << num(row.at("empirical")) << ',' << row.at("verdict").get<std::string>() << ',' << num(row.at("tightness"))
       << '\n';
  }
  return os.str();
}

int report_exit_code(const json& report) {
  for (const auto& row : report.at("rows")) {
    const auto v = row.at("verdict").get<std::string>();
    if (v != "PASS" && v != "SKIPPED-SMALL-GAIN") return 2;
  }
  return 0;
}

}  // namespace koopgram::pipeline
