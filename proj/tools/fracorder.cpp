// fracorder: simulate boundary traces, recover fractional orders, and run
// the self-check suite.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fracorder/checks.hpp"
#include "fracorder/errors.hpp"
#include "fracorder/experiments.hpp"
#include "fracorder/fit.hpp"

namespace fs = std::filesystem;
using namespace fracorder;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kUsage = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("fracorder");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("FRACORDER_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept real level names.
    if (level != spdlog::level::off || std::string(env) == "off")
      spdlog::set_level(level);
    else
      spdlog::warn("FRACORDER_LOG='{}' is not a log level; using info", env);
  }
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad number '") + item + "' in " + what);
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw UsageError(std::string("bad number '") + item + "' in " + what);
    out.push_back(v);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Flags {
  std::string config;
  std::string experiment;
  std::string out;
  int jobs = 0;
  std::string t0;
  bool t0_given = false;
  std::string kind;
  double t_max = 0.0;
  int n_samples = 0;
  std::string example;
  std::string example_case;
  std::string alphas;
  std::string alpha_init;
  double r1 = -1.0;
  int max_iter = 0;
  int multi_start = -1;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON experiment configuration");
  cmd->add_option("--experiment", f.experiment,
                  "table1a|table1b|table2[a|b]|table3[a|b]|fig1|fig2|custom");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--jobs", f.jobs, "worker threads (default 1)")->check(CLI::PositiveNumber);
  cmd->add_option("--t0", f.t0, "comma-separated T0 list");
  cmd->add_option("--kind", f.kind, "fp|fr|both")->check(CLI::IsMember({"fp", "fr", "both"}));
  cmd->add_option("--t-max", f.t_max, "right end of the figure time axis");
  cmd->add_option("--samples", f.n_samples, "trace samples per T0 (default 100)");
  cmd->add_option("--example", f.example, "custom problem: 4.1 or 4.2");
  cmd->add_option("--case", f.example_case, "custom problem: i or ii");
  cmd->add_option("--alphas", f.alphas, "custom problem: true orders, comma-separated");
  cmd->add_option("--r1", f.r1, "custom problem: weight of the lower order");
  cmd->add_option("--alpha-init", f.alpha_init, "initial orders, comma-separated");
  cmd->add_option("--max-iter", f.max_iter, "optimizer iteration cap");
  cmd->add_option("--multi-start", f.multi_start, "lattice starts per exponent");
}

ExperimentConfig build_config(const Flags& f) {
  ExperimentConfig c;
  if (!f.config.empty()) c = ExperimentConfig::from_json(read_file(f.config));
  if (!f.experiment.empty()) c.experiment = f.experiment;
  if (!f.out.empty()) c.out_dir = f.out;
  if (f.jobs > 0) c.jobs = f.jobs;
  if (f.t0_given) c.T0s = parse_list(f.t0, "--t0");
  if (f.kind == "fp") c.kinds = {ModelKind::Polynomial};
  if (f.kind == "fr") c.kinds = {ModelKind::Rational};
  if (f.kind == "both") c.kinds = {ModelKind::Polynomial, ModelKind::Rational};
  if (f.t_max > 0.0) c.t_max = f.t_max;
  if (f.n_samples > 0) c.n_samples = f.n_samples;
  if (!f.example.empty()) c.problem.example = f.example;
  if (!f.example_case.empty()) {
    if (f.example_case == "i")
      c.problem.example_case = ExampleCase::I;
    else if (f.example_case == "ii")
      c.problem.example_case = ExampleCase::II;
    else
      throw UsageError("--case must be i or ii");
  }
  if (!f.alphas.empty()) c.problem.alphas = parse_list(f.alphas, "--alphas");
  if (f.r1 >= 0.0) c.problem.r1 = f.r1;
  if (!f.alpha_init.empty()) c.alpha_init = parse_list(f.alpha_init, "--alpha-init");
  if (f.max_iter > 0) c.fit.max_iter = f.max_iter;
  if (f.multi_start >= 0) c.fit.multi_start = f.multi_start;
  c.validate();
  return c;
}

int cmd_simulate(const ExperimentConfig& c) {
  spdlog::info("simulate {} -> {}", c.experiment, c.out_dir);
  const SimulateReport rep = run_simulate(c);
  for (const auto& f : rep.files) spdlog::debug("wrote {}", f);
  for (const auto& e : rep.failures) spdlog::error("{}", e);
  std::cout << rep.files.size() << " files written to " << c.out_dir << ", "
            << rep.failures.size() << " failures\n";
  if (rep.failures.empty()) return kOk;
  return kPartial;
}

int cmd_fit(const ExperimentConfig& c) {
  if (c.experiment == "fig1" || c.experiment == "fig2")
    throw UsageError("figure experiments have no fit rows; use simulate");
  spdlog::info("fit {} with {} job(s)", c.experiment, c.jobs);
  const auto rows = run_fits(c, [](const ResultRow& r) {
    const auto& ph = r.fit.physical;
    if (ph.orders.alphas.empty())
      spdlog::warn("{} T0={} {}: {}", r.table, r.T0, to_string(r.kind), r.status);
    else
      spdlog::info("{} T0={} {}: alpha_N={:.4f} amplitude={:.4g} iterations={}", r.table, r.T0,
                   to_string(r.kind), ph.orders.alphas.back(), ph.amplitude, r.fit.iterations);
  });

  fs::create_directories(c.out_dir);
  const fs::path csv = fs::path(c.out_dir) / (c.experiment + "_results.csv");
  const fs::path js = fs::path(c.out_dir) / (c.experiment + "_results.json");
  {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    write_results_csv(out, rows);
  }
  {
    std::ofstream out(js, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + js.string());
    out << results_json(rows);
  }
  int failed = 0;
  for (const auto& r : rows)
    if (r.fit.physical.orders.alphas.empty()) ++failed;
  std::cout << rows.size() << " rows written to " << csv.string() << ", " << failed
            << " failed\n";
  return failed ? kPartial : kOk;
}

// Fits a trace CSV read from disk; prints the FitResult JSON.
int cmd_fit_trace(const std::string& path, const std::string& kind, const std::string& pcase,
                  const std::string& alpha_init, double a, const std::string& out_dir) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  const TraceSample sample = read_trace_csv(in);
  const std::vector<double> init = parse_list(alpha_init.empty() ? "0.5" : alpha_init,
                                              "--alpha-init");
  if (init.empty() || init.size() > 2) throw UsageError("--alpha-init takes one or two orders");
  FitConfig cfg;
  cfg.kind = model_kind_from_string(kind.empty() || kind == "both" ? "fp" : kind);
  cfg.problem_case = problem_case_from_string(pcase);
  cfg.source_exponent = a;
  cfg.n_terms = static_cast<int>(init.size());
  cfg.beta_init = {init.back() + a};
  if (init.size() == 2) cfg.beta_init.push_back(2.0 * init.back() - init.front() + a);
  const FitResult r = recover(sample, cfg);
  const std::string json = to_json(r) + "\n";
  if (out_dir.empty()) {
    std::cout << json;
  } else {
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "fit.json", std::ios::binary) << json;
    std::cout << "wrote " << (fs::path(out_dir) / "fit.json").string() << "\n";
  }
  return r.physical.orders.alphas.empty() ? kPartial : kOk;
}

int cmd_check(double perturbation) {
  CheckOptions opt;
  opt.gamma_perturbation = perturbation;
  if (perturbation != 0.0) spdlog::info("Gamma values perturbed by a factor 1 + {}", perturbation);
  int failed = 0;
  for (const CheckResult& r : run_checks(opt)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "measured=%.3e tol=%.1e", r.measured, r.tolerance);
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << buf;
    if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
    std::cout << "\n";
    if (!r.passed) ++failed;
  }
  std::cout << (failed ? std::to_string(failed) + " check(s) failed\n" : "all checks passed\n");
  return failed ? kPartial : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Simulate multi-term fractional relaxation traces and recover the orders"};
  app.require_subcommand(1);

  Flags sim_flags, fit_flags;
  auto* sim = app.add_subcommand("simulate", "write trace (or figure) CSVs with JSON sidecars");
  add_common(sim, sim_flags);

  auto* fit = app.add_subcommand("fit", "recover orders for an experiment or a trace CSV");
  add_common(fit, fit_flags);
  std::string trace_path, trace_case = "initial";
  double source_exponent = 0.0;
  fit->add_option("--trace", trace_path, "fit this `t,g` CSV instead of an experiment");
  fit->add_option("--problem-case", trace_case, "initial|source (with --trace)");
  fit->add_option("--source-exponent", source_exponent, "source exponent a (with --trace)");

  auto* check = app.add_subcommand("check", "run the self-check suite");
  double perturbation = 0.0;
  check->add_option("--gamma-perturbation", perturbation,
                    "relative error injected into Gamma values of the series engine");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  sim_flags.t0_given = sim->count("--t0") > 0;
  fit_flags.t0_given = fit->count("--t0") > 0;

  try {
    if (*sim) return cmd_simulate(build_config(sim_flags));
    if (*fit) {
      if (!trace_path.empty())
        return cmd_fit_trace(trace_path, fit_flags.kind, trace_case, fit_flags.alpha_init,
                             source_exponent, fit_flags.out);
      return cmd_fit(build_config(fit_flags));
    }
    if (*check) return cmd_check(perturbation);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kPartial;
  }
  return kUsage;
}
