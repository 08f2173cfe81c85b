#include "koopgram/errors.hpp"
#include "koopgram/pipeline.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using koopgram::pipeline::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string orders;
  std::string lti;
  long long seed = -1;
  double slack = 0.0;
  bool seed_set = false;
};

std::vector<int> parse_orders(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    try {
      if (dash != std::string::npos && dash > 0) {
        const int lo = std::stoi(item.substr(0, dash)), hi = std::stoi(item.substr(dash + 1));
        for (int r = lo; r <= hi; ++r) out.push_back(r);
      } else {
        out.push_back(std::stoi(item));
      }
    } catch (const std::exception&) {
      throw koopgram::ValidationError("--orders: cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw koopgram::ValidationError("--orders: empty list");
  return out;
}

class Workspace {
 public:
  explicit Workspace(const Options& o) {
    auto cfg = koopgram::pipeline::load_config(o.config);
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.seed_set) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (!o.orders.empty()) cfg.reduction_orders = parse_orders(o.orders);
    if (o.slack != 0.0) cfg.slack = o.slack;
    ctx_ = koopgram::pipeline::make_context(cfg);
    dir_ = cfg.output_dir;
    fs::create_directories(dir_);
  }

  const koopgram::pipeline::Context& ctx() const { return ctx_; }

  json read(const std::string& file, const std::string& stage) const {
    const fs::path p = fs::path(dir_) / file;
    std::ifstream in(p);
    if (!in) throw koopgram::ArtifactError("missing artifact " + p.string() + " (run '" + stage + "' first)", stage);
    try {
      return json::parse(in);
    } catch (const json::exception& e) {
      throw koopgram::ArtifactError("unreadable artifact " + p.string() + ": " + e.what(), stage);
    }
  }

  void write(const std::string& file, const std::string& text) const {
    std::ofstream os(fs::path(dir_) / file, std::ios::binary);
    if (!os) throw koopgram::ArtifactError("cannot write " + file, "write");
    os << text;
  }

  void write(const std::string& file, const json& j) const { write(file, j.dump(2) + "\n"); }

  template <class F>
  auto timed(const std::string& stage, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    auto result = body();
    timings_[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
  }

  // Timings live apart from report.json so the report stays byte-reproducible.
  void flush_timings() const {
    json all = json::object();
    std::ifstream in(fs::path(dir_) / "timings.json");
    if (in) {
      try {
        all = json::parse(in);
      } catch (const json::exception&) {
        all = json::object();
      }
    }
    for (const auto& [k, v] : timings_.items()) all[k] = v;
    write("timings.json", all);
  }

 private:
  koopgram::pipeline::Context ctx_;
  std::string dir_;
  json timings_ = json::object();
};

namespace pl = koopgram::pipeline;

void write_fit(Workspace& ws, const pl::FitArtifacts& a) {
  ws.write("koopman.json", a.koopman);
  ws.write("dataset.json", a.dataset);
  ws.write("dataset.csv", a.dataset_csv);
}

int finish_report(Workspace& ws, const json& report) {
  ws.write("report.json", report);
  ws.write("report.csv", pl::report_csv(report));
  for (const auto& row : report.at("rows")) {
    std::cout << "r=" << row.at("r") << "  bound=" << (row.at("theorem3").is_null() ? "unbounded" : row.at("theorem3").dump())
              << "  empirical=" << row.at("empirical") << "  " << row.at("verdict").get<std::string>() << '\n';
  }
  return pl::report_exit_code(report);
}

int cmd_run(Workspace& ws) {
  const auto& ctx = ws.ctx();
  const auto fit = ws.timed("fit-koopman", [&] { return pl::stage_fit_koopman(ctx); });
  write_fit(ws, fit);
  const auto dec = ws.timed("decompose", [&] { return pl::stage_decompose(ctx, fit.koopman); });
  ws.write("decompose.json", dec);
  const auto bal = ws.timed("balance", [&] { return pl::stage_balance(ctx, fit.koopman, dec); });
  ws.write("balanced.json", bal);
  const auto cert = ws.timed("certify", [&] { return pl::stage_certify(ctx, fit.koopman, dec, bal); });
  ws.write("certificate.json", cert);
  const auto gains = ws.timed("simulate", [&] { return pl::stage_simulate(ctx, fit.koopman, dec, bal, cert); });
  ws.write("gain_estimates.json", gains);
  const auto report = ws.timed("report", [&] { return pl::stage_report(ctx, fit.koopman, bal, cert, gains); });
  ws.flush_timings();
  return finish_report(ws, report);
}

int cmd_stage(Workspace& ws, const std::string& stage, const Options& o) {
  const auto& ctx = ws.ctx();
  if (stage == "fit-koopman") {
    write_fit(ws, ws.timed(stage, [&] { return pl::stage_fit_koopman(ctx); }));
  } else if (stage == "decompose") {
    const auto k = ws.read("koopman.json", "fit-koopman");
    ws.write("decompose.json", ws.timed(stage, [&] { return pl::stage_decompose(ctx, k); }));
  } else if (stage == "balance") {
    if (!o.lti.empty()) {
      std::ifstream in(o.lti);
      if (!in) throw koopgram::ArtifactError("cannot read " + o.lti, "balance");
      const auto sys = pl::lti_from_json(json::parse(in));
      json out = pl::realization_json(koopgram::balance::balance(sys));
      out["lti"] = pl::lti_json(sys);
      ws.write("balanced.json", out);
    } else {
      const auto k = ws.read("koopman.json", "fit-koopman");
      const auto d = ws.read("decompose.json", "decompose");
      ws.write("balanced.json", ws.timed(stage, [&] { return pl::stage_balance(ctx, k, d); }));
    }
  } else if (stage == "certify") {
    const auto k = ws.read("koopman.json", "fit-koopman");
    const auto d = ws.read("decompose.json", "decompose");
    const auto b = ws.read("balanced.json", "balance");
    ws.write("certificate.json", ws.timed(stage, [&] { return pl::stage_certify(ctx, k, d, b); }));
  } else if (stage == "simulate") {
    const auto k = ws.read("koopman.json", "fit-koopman");
    const auto d = ws.read("decompose.json", "decompose");
    const auto b = ws.read("balanced.json", "balance");
    const auto c = ws.read("certificate.json", "certify");
    ws.write("gain_estimates.json", ws.timed(stage, [&] { return pl::stage_simulate(ctx, k, d, b, c); }));
  } else {
    const auto k = ws.read("koopman.json", "fit-koopman");
    const auto b = ws.read("balanced.json", "balance");
    const auto c = ws.read("certificate.json", "certify");
    const auto g = ws.read("gain_estimates.json", "simulate");
    const auto report = ws.timed(stage, [&] { return pl::stage_report(ctx, k, b, c, g); });
    ws.flush_timings();
    return finish_report(ws, report);
  }
  ws.flush_timings();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman-lifted balanced truncation with certified error bounds"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> names{"run", "fit-koopman", "decompose", "balance", "certify", "simulate", "report"};
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "random seed")->each([&](const std::string&) { o.seed_set = true; });
    sub->add_option("--orders", o.orders, "reduction orders, e.g. 1,2,4-6");
    sub->add_option("--slack", o.slack, "gain slack factor (>= 1)");
    if (name == "balance") sub->add_option("--lti", o.lti, "balance a saved LTI {a, b, c} instead");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    Workspace ws(o);
    return stage == "run" ? cmd_run(ws) : cmd_stage(ws, stage, o);
  } catch (const koopgram::ArtifactError& e) {
    std::cerr << "koopgram " << stage << ": " << e.what() << " [stage " << e.stage() << "]\n";
    return 1;
  } catch (const koopgram::ValidationError& e) {
    std::cerr << "koopgram " << stage << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "koopgram " << stage << ": " << e.what() << '\n';
    return 1;
  }
}
