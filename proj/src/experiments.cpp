#include "fracorder/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fracorder/errors.hpp"

namespace fracorder {

namespace {

using json = nlohmann::ordered_json;

const std::vector<std::string> kExperiments{"table1a", "table1b", "table2", "table2a",
                                            "table2b", "table3",  "table3a", "table3b",
                                            "fig1",    "fig2",    "custom"};

constexpr const char* kUnstatedR1 =
    "r1 = 0.5: the weight of the lower order used to generate this data is not stated; "
    "adopted from the two-order figure setup";

template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::string join_shortest(const std::vector<double>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += format_shortest(v[i]);
  }
  return s;
}

FitJob make_job(std::string table, const std::string& example, ExampleCase c,
                const std::vector<double>& alphas, double r1, double T0,
                std::vector<double> alpha_init, const std::vector<ModelKind>& kinds) {
  FitJob job;
  job.table = std::move(table);
  job.example = example;
  job.example_case = c;
  if (example == "4.1") {
    job.problem = build_example_4_1();
    job.truth = example_4_1_orders(c, alphas, r1);
  } else {
    job.problem = build_example_4_2(c);
    job.truth = alphas.size() == 1 ? OrderSpec::single(alphas[0])
                                   : OrderSpec{{alphas[0], alphas[1]}, {r1, 1.0}};
    job.truth.validate();
  }
  job.T0 = T0;
  job.kinds = kinds;
  job.alpha_init = std::move(alpha_init);
  return job;
}

bool wants(const std::string& experiment, const std::string& table) {
  return experiment == table || experiment + "a" == table || experiment + "b" == table;
}

std::vector<double> decades(int from, int to) {
  std::vector<double> v;
  for (int e = from; e <= to; ++e) v.push_back(std::pow(10.0, e));
  return v;
}

std::vector<double> log_grid(double t_max, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = t_max * std::pow(10.0, -6.0 + 6.0 * i / (n - 1));
  t.back() = t_max;
  return t;
}

std::string file_stem(const FitJob& job) {
  return job.table + "_a" + join_shortest(job.truth.alphas, '-') + "_T0_" +
         format_shortest(job.T0);
}

json evaluation_metadata() {
  json e;
  e["kernels"] = "power series of the (multinomial) Mittag-Leffler functions, contour quadrature "
                 "of the Laplace transform where the series is out of range";
  e["series_truncation"] =
      "adaptive: summation stops once the terms past the peak shell fall below 1e-17 of the "
      "partial sum (extended precision below its pruning floor)";
  const detail::SeriesOptions opt;
  e["max_shells_single"] = opt.max_shells_single;
  e["max_shells_multi"] = opt.max_shells_multi;
  e["max_precision_bits"] = opt.max_precision_bits;
  e["z_max"] = kZMax;
  return e;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string figure_csv(const std::vector<double>& t, const std::vector<double>& g,
                       const ModelParams& fp, const ModelParams& fr) {
  std::ostringstream os;
  os << "t,g,f_p,f_r\n";
  char buf[128];
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", t[i], g[i], eval(fp, t[i]),
                  eval(fr, t[i]));
    os << buf;
  }
  return os.str();
}

}  // namespace

void FitOverrides::apply(FitConfig& c) const {
  if (max_iter) c.max_iter = *max_iter;
  if (memory) c.memory = *memory;
  if (multi_start) c.multi_start = *multi_start;
  if (grad_tol) c.grad_tol = *grad_tol;
  if (min_gap) c.min_gap = *min_gap;
  if (nonnegative_weight) c.nonnegative_weight = *nonnegative_weight;
}

void ExperimentConfig::validate() const {
  if (std::find(kExperiments.begin(), kExperiments.end(), experiment) == kExperiments.end())
    throw UsageError("unknown experiment '" + experiment + "'");
  if (T0s) {
    if (T0s->empty()) throw UsageError("the T0 list is empty");
    for (double t : *T0s)
      if (!(t > 0.0) || !std::isfinite(t)) throw UsageError("T0 values must be positive");
  }
  if (kinds.empty()) throw UsageError("no model kinds selected");
  if (n_samples < 2) throw UsageError("n_samples must be at least 2");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw UsageError("t_max must be positive");
  if (fig_points < 2) throw UsageError("fig_points must be at least 2");
  if (jobs < 1) throw UsageError("jobs must be at least 1");
  if (experiment != "custom") return;

  if (problem.example != "4.1" && problem.example != "4.2")
    throw UsageError("unknown example id '" + problem.example + "' (expected 4.1 or 4.2)");
  if (!T0s) throw UsageError("custom experiments need a T0 list");
  const std::size_t n = problem.alphas.size();
  if (problem.example == "4.1" && n != (problem.example_case == ExampleCase::I ? 1u : 2u))
    throw UsageError("example 4.1 case (i) takes one order, case (ii) two");
  if (problem.example == "4.2" && n != 1 && n != 2)
    throw UsageError("example 4.2 takes one or two orders");
  try {
    OrderSpec s{problem.alphas, n == 2 ? std::vector<double>{problem.r1, 1.0}
                                       : std::vector<double>(n, 1.0)};
    s.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  if (!alpha_init.empty() && alpha_init.size() != n)
    throw UsageError("alpha_init must have one entry per true order");
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config: top level must be an object");
  auto check_keys = [](const json& obj, std::initializer_list<const char*> allowed,
                       const char* where) {
    for (const auto& [k, v] : obj.items()) {
      (void)v;
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
        throw UsageError(std::string("config: unknown key '") + k + "' in " + where);
    }
  };
  check_keys(j,
             {"experiment", "problem", "alpha_init", "T0", "kinds", "fit", "n_samples", "t_max",
              "fig_points", "jobs", "out"},
             "config");

  ExperimentConfig c;
  try {
    if (j.contains("experiment")) c.experiment = j["experiment"].get<std::string>();
    if (j.contains("problem")) {
      const json& p = j["problem"];
      check_keys(p, {"example", "case", "alphas", "r1"}, "problem");
      if (p.contains("example")) c.problem.example = p["example"].get<std::string>();
      if (p.contains("case")) {
        const auto s = p["case"].get<std::string>();
        if (s == "i" || s == "I")
          c.problem.example_case = ExampleCase::I;
        else if (s == "ii" || s == "II")
          c.problem.example_case = ExampleCase::II;
        else
          throw UsageError("config: problem.case must be 'i' or 'ii'");
      }
      if (p.contains("alphas")) c.problem.alphas = p["alphas"].get<std::vector<double>>();
      if (p.contains("r1")) c.problem.r1 = p["r1"].get<double>();
    }
    if (j.contains("alpha_init")) c.alpha_init = j["alpha_init"].get<std::vector<double>>();
    if (j.contains("T0")) c.T0s = j["T0"].get<std::vector<double>>();
    if (j.contains("kinds")) {
      c.kinds.clear();
      for (const auto& k : j["kinds"]) c.kinds.push_back(model_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("fit")) {
      const json& f = j["fit"];
      check_keys(f,
                 {"max_iter", "memory", "multi_start", "grad_tol", "min_gap",
                  "nonnegative_weight"},
                 "fit");
      if (f.contains("max_iter")) c.fit.max_iter = f["max_iter"].get<int>();
      if (f.contains("memory")) c.fit.memory = f["memory"].get<int>();
      if (f.contains("multi_start")) c.fit.multi_start = f["multi_start"].get<int>();
      if (f.contains("grad_tol")) c.fit.grad_tol = f["grad_tol"].get<double>();
      if (f.contains("min_gap")) c.fit.min_gap = f["min_gap"].get<double>();
      if (f.contains("nonnegative_weight"))
        c.fit.nonnegative_weight = f["nonnegative_weight"].get<bool>();
    }
    if (j.contains("n_samples")) c.n_samples = j["n_samples"].get<int>();
    if (j.contains("t_max")) c.t_max = j["t_max"].get<double>();
    if (j.contains("fig_points")) c.fig_points = j["fig_points"].get<int>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return c;
}

std::vector<FitJob> plan_jobs(const ExperimentConfig& config) {
  config.validate();
  const std::string& x = config.experiment;
  const auto& kinds = config.kinds;
  auto rows = [&](std::vector<double> defaults) { return config.T0s ? *config.T0s : defaults; };
  std::vector<FitJob> jobs;

  if (x == "table1a") {
    for (double T0 : rows(decades(-7, -1)))
      jobs.push_back(make_job("table1a", "4.1", ExampleCase::I, {0.7}, 0.5, T0, {0.5}, kinds));
  } else if (x == "table1b") {
    for (double T0 : rows({1e-6}))
      for (double a : {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9})
        jobs.push_back(make_job("table1b", "4.1", ExampleCase::I, {a}, 0.5, T0, {0.5}, kinds));
  } else if (x.starts_with("table2")) {
    if (wants(x, "table2a"))
      for (double T0 : rows(decades(-7, -2)))
        jobs.push_back(
            make_job("table2a", "4.1", ExampleCase::II, {0.6, 0.9}, 0.5, T0, {0.4, 0.8}, kinds));
    if (wants(x, "table2b"))
      for (double T0 : rows(decades(-7, -2)))
        jobs.push_back(
            make_job("table2b", "4.1", ExampleCase::II, {0.5, 0.7}, 0.5, T0, {0.2, 0.6}, kinds));
    for (auto& j : jobs) j.assumptions.push_back(kUnstatedR1);
  } else if (x.starts_with("table3")) {
    if (wants(x, "table3a"))
      for (double T0 : rows(decades(-8, -4)))
        jobs.push_back(
            make_job("table3a", "4.2", ExampleCase::I, {0.5, 0.8}, 0.5, T0, {0.3, 0.7}, kinds));
    if (wants(x, "table3b"))
      for (double T0 : rows(decades(-8, -4)))
        jobs.push_back(
            make_job("table3b", "4.2", ExampleCase::II, {0.5, 0.7}, 0.5, T0, {0.3, 0.6}, kinds));
    for (auto& j : jobs) j.assumptions.push_back(kUnstatedR1);
  } else if (x == "custom") {
    std::vector<double> init = config.alpha_init;
    if (init.empty())
      for (double a : config.problem.alphas) init.push_back(std::max(0.05, a - 0.2));
    for (double T0 : *config.T0s) {
      jobs.push_back(make_job("custom", config.problem.example, config.problem.example_case,
                              config.problem.alphas, config.problem.r1, T0, init, kinds));
      if (config.problem.alphas.size() == 2)
        jobs.back().assumptions.push_back("r1 = " + format_shortest(config.problem.r1) +
                                          " used to generate the data");
    }
  } else {
    throw UsageError("experiment '" + x + "' has no fit rows");
  }
  return jobs;
}

FitConfig fit_config_for(const FitJob& job, ModelKind kind, const FitOverrides& overrides) {
  FitConfig c;
  c.kind = kind;
  c.problem_case = job.problem.problem_case;
  c.source_exponent = job.problem.source_exponent;
  const double a = c.source_exponent;
  const auto& init = job.alpha_init;
  c.n_terms = static_cast<int>(init.size());
  c.beta_init = {init.back() + a};
  if (init.size() == 2) c.beta_init.push_back(2.0 * init.back() - init.front() + a);
  overrides.apply(c);
  return c;
}

std::vector<ResultRow> run_fits(const ExperimentConfig& config,
                                const std::function<void(const ResultRow&)>& on_row) {
  const std::vector<FitJob> jobs = plan_jobs(config);
  std::vector<std::vector<ResultRow>> out(jobs.size());
  std::mutex report;

  parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
    const FitJob& job = jobs[i];
    std::optional<TraceSample> sample;
    std::string trace_error;
    try {
      sample = sample_trace(job.problem, job.truth, job.T0, config.n_samples);
    } catch (const std::exception& e) {
      trace_error = std::string("trace: ") + e.what();
    }
    for (ModelKind kind : job.kinds) {
      ResultRow row;
      row.table = job.table;
      row.truth = job.truth;
      row.T0 = job.T0;
      row.kind = kind;
      row.fit.params.kind = kind;
      row.fit.params.problem_case = job.problem.problem_case;
      row.fit.T0 = job.T0;
      row.fit.assumptions = job.assumptions;
      if (!sample) {
        row.status = trace_error;
      } else {
        try {
          row.fit = recover(*sample, fit_config_for(job, kind, config.fit));
          row.fit.assumptions = job.assumptions;
          row.status = row.fit.status;
        } catch (const std::exception& e) {
          row.status = std::string("fit: ") + e.what();
        }
      }
      if (on_row) {
        std::lock_guard lock(report);
        on_row(row);
      }
      out[i].push_back(std::move(row));
    }
  });

  std::vector<ResultRow> rows;
  for (auto& v : out)
    for (auto& r : v) rows.push_back(std::move(r));
  return rows;
}

std::string format_shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "table,alpha_true,T0,kind,alpha1,alpha2,amplitude,r1,objective,iterations,converged,"
         "status\n";
  for (const ResultRow& r : rows) {
    const auto& ph = r.fit.physical;
    const bool mapped = !ph.orders.alphas.empty();
    const bool two = mapped && ph.orders.size() == 2;
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << r.table << ',' << join_shortest(r.truth.alphas, ';') << ',' << format_shortest(r.T0)
        << ',' << to_string(r.kind) << ',';
    out << (mapped ? format_shortest(ph.orders.alphas.front()) : "") << ',';
    out << (two ? format_shortest(ph.orders.alphas.back()) : "") << ',';
    out << (mapped ? format_shortest(ph.amplitude) : "") << ',';
    out << (two ? format_shortest(ph.orders.weights.front()) : "") << ',';
    out << (r.fit.params.beta.empty() ? "" : format_shortest(r.fit.objective)) << ',';
    out << r.fit.iterations << ',' << (r.fit.converged ? "true" : "false") << ','
        << (status.empty() ? "ok" : status) << '\n';
  }
}

std::string results_json(const std::vector<ResultRow>& rows) {
  json arr = json::array();
  for (const ResultRow& r : rows) {
    json j = json::parse(to_json(r.fit, -1));
    j["table"] = r.table;
    j["alpha_true"] = r.truth.alphas;
    j["status"] = r.status.empty() ? std::string("ok") : r.status;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

SimulateReport run_simulate(const ExperimentConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);

  struct Artifact {
    std::string stem;
    std::string csv;
    json meta;
    std::string error;
  };
  std::vector<Artifact> artifacts;
  const double lambda = std::numbers::pi * std::numbers::pi + 1.0;

  if (config.experiment == "fig1" || config.experiment == "fig2") {
    const bool one = config.experiment == "fig1";
    std::vector<std::vector<double>> panels;
    if (one)
      panels = {{0.25}, {0.5}, {0.75}, {1.0}};
    else
      panels = {{0.2, 0.3}, {0.2, 0.5}, {0.2, 0.7}, {0.2, 0.9}};
    artifacts.resize(panels.size());
    const std::vector<double> t = log_grid(config.t_max, config.fig_points);
    parallel_for(panels.size(), config.jobs, [&](std::size_t i) {
      const auto& a = panels[i];
      Artifact& art = artifacts[i];
      art.stem = config.experiment + "_a" + join_shortest(a, '-');
      art.meta["experiment"] = config.experiment;
      art.meta["example"] = "4.1";
      art.meta["case"] = one ? "i" : "ii";
      art.meta["alphas"] = a;
      art.meta["weights"] = one ? std::vector<double>{1.0} : std::vector<double>{0.5, 1.0};
      art.meta["lambda"] = lambda;
      art.meta["t_max"] = config.t_max;
      art.meta["points"] = config.fig_points;
      art.meta["time_grid"] = "log-spaced over [1e-6 t_max, t_max]";
      art.meta["evaluation"] = evaluation_metadata();
      art.meta["assumptions"] = json::array();
      try {
        const SpectralProblem problem = build_example_4_1();
        std::vector<double> g(t.size());
        ModelParams fp, fr;
        if (one && a[0] == 1.0) {
          // Integer order: the relaxation is a plain exponential.
          for (std::size_t k = 0; k < t.size(); ++k) g[k] = std::exp(-lambda * t[k]);
          fp = ModelParams{ModelKind::Polynomial, ProblemCase::InitialData, {1.0, -lambda}, {1.0}};
          fr = ModelParams{ModelKind::Rational, ProblemCase::InitialData, {1.0, lambda}, {1.0}};
        } else {
          const OrderSpec spec = example_4_1_orders(one ? ExampleCase::I : ExampleCase::II, a);
          for (std::size_t k = 0; k < t.size(); ++k) g[k] = trace(problem, spec, t[k]);
          PhysicalParams phys{spec, lambda, 1.0, true};
          fp = from_physical(phys, ModelKind::Polynomial, ProblemCase::InitialData);
          fr = from_physical(phys, ModelKind::Rational, ProblemCase::InitialData);
        }
        art.csv = figure_csv(t, g, fp, fr);
      } catch (const std::exception& e) {
        art.error = art.stem + ": " + e.what();
      }
    });
  } else {
    const std::vector<FitJob> jobs = plan_jobs(config);
    artifacts.resize(jobs.size());
    parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
      const FitJob& job = jobs[i];
      Artifact& art = artifacts[i];
      art.stem = file_stem(job);
      art.meta["experiment"] = config.experiment;
      art.meta["table"] = job.table;
      art.meta["example"] = job.example;
      art.meta["case"] = job.example_case == ExampleCase::I ? "i" : "ii";
      art.meta["problem_case"] = to_string(job.problem.problem_case);
      art.meta["alphas"] = job.truth.alphas;
      art.meta["weights"] = job.truth.weights;
      art.meta["T0"] = job.T0;
      art.meta["n"] = config.n_samples;
      if (job.problem.problem_case == ProblemCase::Source) {
        art.meta["source_exponent"] = job.problem.source_exponent;
        art.meta["source_scale"] = job.problem.source_scale;
      }
      art.meta["evaluation"] = evaluation_metadata();
      art.meta["assumptions"] = job.assumptions;
      try {
        std::ostringstream os;
        write_trace_csv(os, sample_trace(job.problem, job.truth, job.T0, config.n_samples));
        art.csv = os.str();
      } catch (const std::exception& e) {
        art.error = art.stem + ": " + e.what();
      }
    });
  }

  SimulateReport report;
  for (const Artifact& art : artifacts) {
    if (!art.error.empty()) {
      report.failures.push_back(art.error);
      continue;
    }
    const fs::path csv = dir / (art.stem + ".csv");
    write_text(csv, art.csv);
    write_text(dir / (art.stem + ".json"), art.meta.dump(2) + "\n");
    report.files.push_back(csv.string());
  }
  return report;
}

}  // namespace fracorder
