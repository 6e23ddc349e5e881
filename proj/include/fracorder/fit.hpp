#pragma once

// Box-constrained least-squares recovery of model exponents and amplitudes
// from a sampled boundary trace.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracorder/forward.hpp"
#include "fracorder/models.hpp"

namespace fracorder {

struct FitConfig {
  ModelKind kind = ModelKind::Polynomial;
  ProblemCase problem_case = ProblemCase::InitialData;
  int n_terms = 1;
  std::vector<double> beta_init;
  /// Per-exponent (lo, hi); empty means (0.01, 1.99) for every exponent.
  std::vector<std::pair<double, double>> beta_bounds;
  int max_iter = 200;
  int memory = 10;
  double grad_tol = 1e-10;
  double min_gap = 1e-3;
  int multi_start = 0;
  /// Source exponent a, used when mapping to physical parameters.
  double source_exponent = 0.0;
  /// Starting amplitudes; computed by linear_init when absent.
  std::optional<std::vector<double>> c_init;
  /// Keep the exponents at beta_init and fit amplitudes only.
  bool freeze_beta = false;
  /// With two terms, keep the implied weight r1 non-negative: the second
  /// power-term coefficient is bounded to the sign opposite the first one
  /// (as found at the starting point).
  bool nonnegative_weight = true;
  /// Store the objective and exponents of every accepted iterate.
  bool record_history = false;

  std::vector<std::pair<double, double>> bounds() const;
  void validate() const;
};

struct FitResult {
  ModelParams params;
  PhysicalParams physical;
  double T0 = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
  /// Empty on success, otherwise why the fit or the physical mapping failed.
  std::string status;
  std::vector<std::string> assumptions;

  std::vector<double> objective_history;
  std::vector<std::vector<double>> beta_history;
};

/// J = (1/2) (T0 / n) sum_k (g_k - f(t_k))^2.
double objective(const TraceSample& sample, const ModelParams& params);

/// dJ over (c..., beta...).
std::vector<double> objective_grad(const TraceSample& sample, const ModelParams& params);

struct LinearInit {
  std::vector<double> c;
  /// ||residual|| / ||rhs|| of the (possibly linearized) regression.
  double relative_residual = 0.0;
  /// Set when relative_residual exceeds 1e-2.
  bool poor_fit = false;
};

/// Amplitudes for fixed exponents by linear least squares. Rational models
/// are linearized: 1/g on (1, t^beta) for initial data, g / (cA - g) on
/// t^beta for sources with cA taken from a preliminary polynomial fit.
LinearInit linear_init(const TraceSample& sample, const std::vector<double>& beta, ModelKind kind,
                       ProblemCase problem_case);

/// Projected limited-memory quasi-Newton minimization of J with box bounds
/// on the exponents. Never throws for non-convergence.
FitResult minimize(const TraceSample& sample, const FitConfig& config);

/// minimize (from a lattice of starts when multi_start > 1), then
/// to_physical. Mapping failures are reported with converged = false.
FitResult recover(const TraceSample& sample, const FitConfig& config);

/// JSON object with keys kind, case, T0, beta, c, alpha, r, amplitude,
/// constant, objective, iterations, converged, assumptions.
std::string to_json(const FitResult& result, int indent = 2);

}  // namespace fracorder
