#pragma once

// Batch experiments: trace generation and order recovery for the table and
// figure setups, with deterministic CSV/JSON artifacts.

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracorder/fit.hpp"
#include "fracorder/forward.hpp"
#include "fracorder/models.hpp"

namespace fracorder {

/// Thrown for malformed experiment configurations (CLI exit code 2).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Selects the forward problem of a custom experiment.
struct ProblemSelector {
  /// "4.1" (single mode) or "4.2" (unit square, corner observation).
  std::string example = "4.1";
  ExampleCase example_case = ExampleCase::I;
  std::vector<double> alphas{0.7};
  /// Weight of the lower order when two orders are given.
  double r1 = 0.5;
};

struct FitOverrides {
  std::optional<int> max_iter;
  std::optional<int> memory;
  std::optional<int> multi_start;
  std::optional<double> grad_tol;
  std::optional<double> min_gap;
  std::optional<bool> nonnegative_weight;

  void apply(FitConfig& config) const;
};

struct ExperimentConfig {
  /// table1a, table1b, table2, table2a, table2b, table3, table3a, table3b,
  /// fig1, fig2 or custom.
  std::string experiment = "custom";
  ProblemSelector problem;
  /// Initial orders for custom fits; defaults to the true orders minus 0.2.
  std::vector<double> alpha_init;
  /// Overrides the experiment's T0 rows when present; must not be empty.
  std::optional<std::vector<double>> T0s;
  std::vector<ModelKind> kinds{ModelKind::Polynomial, ModelKind::Rational};
  FitOverrides fit;
  int n_samples = 100;
  /// Figure time axis: fig_points log-spaced points in (0, t_max].
  double t_max = 1.0;
  int fig_points = 500;
  int jobs = 1;
  std::string out_dir = ".";

  /// Throws UsageError.
  void validate() const;

  /// Parses a JSON document; unknown keys are rejected.
  static ExperimentConfig from_json(const std::string& text);
};

/// One recovery: a synthetic trace and the models fitted to it.
struct FitJob {
  std::string table;
  ExampleCase example_case = ExampleCase::I;
  std::string example;
  SpectralProblem problem;
  OrderSpec truth;
  double T0 = 0.0;
  std::vector<ModelKind> kinds;
  std::vector<double> alpha_init;
  std::vector<std::string> assumptions;
};

struct ResultRow {
  std::string table;
  OrderSpec truth;
  double T0 = 0.0;
  ModelKind kind = ModelKind::Polynomial;
  FitResult fit;
  /// Empty when the row succeeded.
  std::string status;
};

/// Expands an experiment into independent jobs in output order.
std::vector<FitJob> plan_jobs(const ExperimentConfig& config);

/// Fit configuration used for one job and model kind.
FitConfig fit_config_for(const FitJob& job, ModelKind kind, const FitOverrides& overrides);

/// Runs every job on `config.jobs` worker threads. Rows come back in plan
/// order regardless of scheduling; failures are recorded per row.
std::vector<ResultRow> run_fits(const ExperimentConfig& config,
                                const std::function<void(const ResultRow&)>& on_row = {});

/// Shortest decimal string that reads back to the same double.
std::string format_shortest(double v);

/// Columns: table, alpha_true, T0, kind, alpha1, alpha2, amplitude, r1,
/// objective, iterations, converged, status.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);

/// JSON array with one FitResult object per row.
std::string results_json(const std::vector<ResultRow>& rows);

struct SimulateReport {
  std::vector<std::string> files;
  std::vector<std::string> failures;
};

/// Writes trace CSVs (or figure CSVs with g, f_p, f_r columns) plus a JSON
/// sidecar per file into config.out_dir.
SimulateReport run_simulate(const ExperimentConfig& config);

}  // namespace fracorder
