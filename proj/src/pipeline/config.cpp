#include "koopgram/errors.hpp"
#include "koopgram/expr.hpp"
#include "koopgram/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace koopgram::pipeline {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
  if (!(slack >= 1.0)) throw ValidationError("config: slack must be at least 1");
  if (sample_budget < 100) throw ValidationError("config: sample_budget must be at least 100");
  if (ensemble.count < 1) throw ValidationError("config: ensemble.count must be at least 1");
  if (ensemble.horizon < 0.0) throw ValidationError("config: ensemble.horizon must be nonnegative");
  if (ensemble.amplitude < 0.0) throw ValidationError("config: ensemble.amplitude must be nonnegative");
  for (int r : reduction_orders)
    if (r < 1) throw ValidationError("config: reduction orders must be positive");
  static const std::set<std::string> kinds{"auto", "identity", "monomials", "exact", "user"};
  if (!kinds.count(dictionary.kind)) throw ValidationError("config: unknown dictionary kind '" + dictionary.kind + "'");
  if (dictionary.kind == "monomials" && dictionary.degree < 1)
    throw ValidationError("config: monomial degree must be positive");
  if (output_dir.empty()) throw ValidationError("config: output_dir must not be empty");
}

PipelineConfig config_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  PipelineConfig c;
  try {
    if (j.contains("system")) {
      const json& s = j.at("system");
      if (s.is_object()) {
        c.system_spec = s;
        c.system = s.value("name", "user");
      } else {
        c.system = s.get<std::string>();
        if (c.system.ends_with(".json")) {
          fs::path p(c.system);
          if (p.is_relative()) p = fs::path(base_dir) / p;
          std::ifstream in(p);
          if (!in) throw ValidationError("config: cannot read system spec " + p.string());
          c.system_spec = json::parse(in);
        }
      }
    }
    if (j.contains("dictionary")) {
      const json& d = j.at("dictionary");
      if (d.is_string()) {
        c.dictionary.kind = d.get<std::string>();
      } else {
        c.dictionary.kind = d.value("kind", c.dictionary.kind);
        c.dictionary.degree = d.value("degree", c.dictionary.degree);
        if (d.contains("observables")) c.dictionary.observables = d.at("observables").get<std::vector<std::string>>();
      }
    }
    if (j.contains("reduction_orders")) c.reduction_orders = j.at("reduction_orders").get<std::vector<int>>();
    c.slack = j.value("slack", c.slack);
    c.sample_budget = j.value("sample_budget", c.sample_budget);
    c.seed = j.value("seed", c.seed);
    if (j.contains("ensemble")) {
      const json& e = j.at("ensemble");
      c.ensemble.count = e.value("count", c.ensemble.count);
      c.ensemble.horizon = e.value("horizon", c.ensemble.horizon);
      c.ensemble.amplitude = e.value("amplitude", c.ensemble.amplitude);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config: " + path + ": " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

json to_json(const PipelineConfig& c) {
  json j;
  j["system"] = c.system_spec ? *c.system_spec : json(c.system);
  j["dictionary"] = {{"kind", c.dictionary.kind}, {"degree", c.dictionary.degree},
                     {"observables", c.dictionary.observables}};
  j["reduction_orders"] = c.reduction_orders;
  j["slack"] = c.slack;
  j["sample_budget"] = c.sample_budget;
  j["seed"] = c.seed;
  j["ensemble"] = {{"count", c.ensemble.count}, {"horizon", c.ensemble.horizon}, {"amplitude", c.ensemble.amplitude}};
  j["output_dir"] = c.output_dir;
  return j;
}

namespace {

expr::VectorExpr parse_items(const json& arr, const char* what) {
  if (!arr.is_array() || arr.empty()) throw ValidationError(std::string("system: '") + what + "' must be a nonempty array");
  expr::VectorExpr v;
  for (const auto& item : arr) v.items.push_back(expr::from_json(item));
  return v;
}

}  // namespace

ControlSystem system_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("system: expected an object");
  ControlSystem s;
  try {
    s.name = j.value("name", std::string("user"));
    s.n = j.at("n").get<int>();
    s.l = j.at("l").get<int>();
    const auto f = parse_items(j.at("f"), "f");
    const auto h = parse_items(j.at("h"), "h");
    s.p = j.value("p", static_cast<int>(h.items.size()));
    if (static_cast<int>(f.items.size()) != s.n) throw ValidationError("system: f must have n entries");
    if (static_cast<int>(h.items.size()) != s.p) throw ValidationError("system: h must have p entries");
    for (const auto& e : f.items)
      if (expr::state_arity(e) > s.n || expr::input_arity(e) > s.l)
        throw ValidationError("system: f references a variable beyond n or l: " + expr::to_string(e));
    for (const auto& e : h.items)
      if (expr::state_arity(e) > s.n || expr::input_arity(e) > 0)
        throw ValidationError("system: h may only depend on the state: " + expr::to_string(e));
    s.f = [f](const Vector& x, const Vector& u) { return f.eval(x, u); };
    s.h = [h, l = s.l](const Vector& x) { return h.eval(x, Vector::Zero(l)); };
    const double radius = j.value("state_radius", 1.0);
    s.input_amplitude = j.value("input_amplitude", 1.0);
    s.state_domain = gsvd::SamplingDomain::ball(radius);
    s.input_domain = gsvd::SamplingDomain::ball(s.input_amplitude);
    if (j.contains("exact_dictionary")) s.exact_dictionary = j.at("exact_dictionary").get<std::vector<std::string>>();
    if (j.contains("lipschitz_u")) {
      s.lipschitz_u = j.at("lipschitz_u").get<double>();
    } else {
      // sup of |df/du| over the region of interest, with the default slack
      const auto ju = f.jacobian_exprs(expr::Op::input, s.l);
      double worst = 0.0;
      const auto xs = gsvd::sample_points(s.n, 2000, 11, s.state_domain);
      const auto us = gsvd::sample_points(s.l, 2000, 12, s.input_domain);
      for (std::size_t k = 0; k < xs.size(); ++k) {
        Matrix m(s.n, s.l);
        for (int a = 0; a < s.n; ++a)
          for (int b = 0; b < s.l; ++b) m(a, b) = expr::eval(ju[a][b], xs[k], us[k]);
        worst = std::max(worst, numkernel::norm2(m));
      }
      s.lipschitz_u = gsvd::kDefaultSlack * worst;
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("system: ") + e.what());
  }
  s.validate();
  return s;
}

Context make_context(const PipelineConfig& config) {
  config.validate();
  Context ctx{config, config.system_spec ? system_from_json(*config.system_spec) : harness::builtin_system(config.system),
              koopman::Dictionary::identity(1)};
  const auto& sys = ctx.system;
  const auto& d = config.dictionary;
  std::string kind = d.kind;
  if (kind == "auto") kind = sys.exact_dictionary.empty() ? "identity" : "exact";
  if (kind == "identity") {
    ctx.dictionary = koopman::Dictionary::identity(sys.n);
  } else if (kind == "monomials") {
    ctx.dictionary = koopman::Dictionary::monomials(sys.n, d.degree);
  } else if (kind == "exact") {
    if (sys.exact_dictionary.empty()) throw ValidationError("config: system '" + sys.name + "' has no exact dictionary");
    ctx.dictionary = koopman::Dictionary::user(sys.n, sys.exact_dictionary);
  } else {
    ctx.dictionary = koopman::Dictionary::user(sys.n, d.observables);
  }
  return ctx;
}

std::vector<int> orders_for(const Context& ctx, int q) {
  std::vector<int> orders = ctx.config.reduction_orders;
  if (orders.empty())
    for (int r = 1; r <= q; ++r) orders.push_back(r);
  for (int r : orders)
    if (r < 1 || r > q)
      throw ValidationError("config: reduction order " + std::to_string(r) + " outside [1, " + std::to_string(q) + "]");
  return orders;
}

}  // namespace koopgram::pipeline
