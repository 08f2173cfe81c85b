#include "koopgram/errors.hpp"
#include "koopgram/pipeline.hpp"

#include <cmath>

namespace koopgram::pipeline {

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Matrix json_matrix(const json& j) {
  if (!j.is_array()) throw ValidationError("artifact: matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(i);
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ValidationError("artifact: ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row.at(k).get<double>();
  }
  return m;
}

Vector json_vector(const json& j) {
  if (!j.is_array()) throw ValidationError("artifact: vector must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

json lti_json(const numkernel::LtiSystem& sys) {
  return {{"a", matrix_json(sys.a)}, {"b", matrix_json(sys.b)}, {"c", matrix_json(sys.c)}};
}

numkernel::LtiSystem lti_from_json(const json& j) {
  numkernel::LtiSystem s{json_matrix(j.at("a")), json_matrix(j.at("b")), json_matrix(j.at("c"))};
  s.validate();
  return s;
}

json realization_json(const balance::BalancedRealization& bal) {
  return {{"q", bal.q()},
          {"n", bal.n()},
          {"hsv", vector_json(bal.hsv)},
          {"t", matrix_json(bal.t)},
          {"t_inv", matrix_json(bal.t_inv)},
          {"a_bal", matrix_json(bal.a_bal)},
          {"b_bal", matrix_json(bal.b_bal)},
          {"c_bal", matrix_json(bal.c_bal)},
          {"r", matrix_json(bal.r)},
          {"xc", matrix_json(bal.xc)},
          {"yo", matrix_json(bal.yo)}};
}

balance::BalancedRealization realization_from_json(const json& j) {
  balance::BalancedRealization bal;
  try {
    bal.t = json_matrix(j.at("t"));
    bal.t_inv = json_matrix(j.at("t_inv"));
    bal.hsv = json_vector(j.at("hsv"));
    bal.a_bal = json_matrix(j.at("a_bal"));
    bal.b_bal = json_matrix(j.at("b_bal"));
    bal.c_bal = json_matrix(j.at("c_bal"));
    bal.r = json_matrix(j.at("r"));
    bal.xc = json_matrix(j.at("xc"));
    bal.yo = json_matrix(j.at("yo"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("balanced artifact: ") + e.what());
  }
  bal.r_pinv = numkernel::pinv(bal.r);
  return bal;
}

json certificate_json(const certify::ErrorCertificate& c) {
  auto fd = [](const certify::FeedbackDecomposition& d) {
    return json{{"gp_norm", number(d.gp_norm)},
                {"ge_gain", number(d.ge_gain)},
                {"loop_gain", number(d.loop_gain)},
                {"small_gain_ok", d.small_gain_ok},
                {"range_defect", number(d.range_defect)}};
  };
  return {{"r", c.r},
          {"exact_model", c.exact_model},
          {"control_affine", c.control_affine},
          {"beta", number(c.beta)},
          {"beta_factors",
           {{"lipschitz_lifted", number(c.lipschitz_lifted)},
            {"sigma_pinv_ut_tinv_norm", number(c.sigma_pinv_ut_tinv_norm)},
            {"t_norm", number(c.t_norm)}}},
          {"hinf_gi", number(c.hinf_gi)},
          {"hinf_gl", number(c.hinf_gl)},
          {"hankel_tail", number(c.hankel_tail)},
          {"c_gap_full", number(c.c_gap_full)},
          {"c_gap_reduced", number(c.c_gap_reduced)},
          {"xi_full", number(c.xi_full)},
          {"xi_reduced", number(c.xi_reduced)},
          {"theorem2_core", number(c.theorem2_core)},
          {"theorem2_bound", number(c.theorem2_bound)},
          {"theorem3_bound", c.theorem3_bound ? number(*c.theorem3_bound) : json(nullptr)},
          {"status", certify::to_string(c.status)},
          {"full", fd(c.full)},
          {"reduced", fd(c.reduced)}};
}

json gain_estimate_json(const harness::GainEstimate& e) {
  json ex = json::array();
  for (const auto& x : e.excluded) ex.push_back({{"signal", x.signal}, {"reason", x.reason}});
  json per = json::array();
  for (double v : e.per_signal) per.push_back(number(v));
  return {{"value", number(e.value)},
          {"ensemble", e.ensemble},
          {"count", e.count},
          {"horizon", number(e.horizon)},
          {"per_signal", per},
          {"excluded", ex}};
}

}  // namespace koopgram::pipeline
