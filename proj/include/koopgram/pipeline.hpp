#pragma once

#include "koopgram/balance.hpp"
#include "koopgram/certify.hpp"
#include "koopgram/harness.hpp"
#include "koopgram/koopman.hpp"
#include "koopgram/system.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace koopgram::pipeline {

using nlohmann::json;

struct DictionaryConfig {
  std::string kind = "auto";  // auto, identity, monomials, exact, user
  int degree = 2;
  std::vector<std::string> observables;
};

struct EnsembleConfig {
  int count = 12;
  double horizon = 0.0;    // 0: 20 / |Re lambda_max|
  double amplitude = 0.0;  // 0: the system's default
};

struct PipelineConfig {
  std::string system = "lti6";  // builtin name or path to a system spec
  std::optional<json> system_spec;
  DictionaryConfig dictionary;
  std::vector<int> reduction_orders;  // empty: 1..q
  double slack = gsvd::kDefaultSlack;
  long sample_budget = 4000;
  std::uint64_t seed = 1;
  EnsembleConfig ensemble;
  std::string output_dir = "koopgram_out";

  void validate() const;
};

PipelineConfig config_from_json(const json& j, const std::string& base_dir = ".");
PipelineConfig load_config(const std::string& path);
json to_json(const PipelineConfig& c);

// Declarative system: {"name", "n", "l", "p", "f": [...], "h": [...],
// "lipschitz_u", "exact_dictionary", "state_radius", "input_amplitude"}.
// Entries of f and h are infix strings or expression objects.
ControlSystem system_from_json(const json& j);

// Resolved inputs shared by every stage.
struct Context {
  PipelineConfig config;
  ControlSystem system;
  koopman::Dictionary dictionary;
};

Context make_context(const PipelineConfig& config);

json matrix_json(const Matrix& m);
json vector_json(const Vector& v);
Matrix json_matrix(const json& j);
Vector json_vector(const json& j);

json realization_json(const balance::BalancedRealization& bal);
balance::BalancedRealization realization_from_json(const json& j);
json lti_json(const numkernel::LtiSystem& sys);
numkernel::LtiSystem lti_from_json(const json& j);
json certificate_json(const certify::ErrorCertificate& c);
json gain_estimate_json(const harness::GainEstimate& e);

struct FitArtifacts {
  json koopman;
  json dataset;
  std::string dataset_csv;
};

FitArtifacts stage_fit_koopman(const Context& ctx);
json stage_decompose(const Context& ctx, const json& koopman);
json stage_balance(const Context& ctx, const json& koopman, const json& decompose);
json stage_certify(const Context& ctx, const json& koopman, const json& decompose, const json& balanced);
json stage_simulate(const Context& ctx, const json& koopman, const json& decompose, const json& balanced,
                    const json& certificate);
json stage_report(const Context& ctx, const json& koopman, const json& balanced, const json& certificate,
                  const json& gains);
std::string report_csv(const json& report);

// 0 when every verdict is PASS or SKIPPED-SMALL-GAIN, 2 otherwise.
int report_exit_code(const json& report);

// Objects rebuilt from artifacts.
koopman::KoopmanModel model_from_json(const Context& ctx, const json& koopman);
gsvd::GsvdFactor control_factor_from_json(const Context& ctx, const json& decompose);
gsvd::TwoArgMap lifted_control_map(const Context& ctx);

std::vector<int> orders_for(const Context& ctx, int q);

}  // namespace koopgram::pipeline
