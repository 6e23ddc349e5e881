#pragma once

// Spectral forward model: boundary traces g(t) = sum_n w_n K_n(t) of
// eigenfunction expansions, their Laplace transforms, and the example
// problems used throughout the experiments.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracorder/specfun.hpp"

namespace fracorder {

enum class ProblemCase { InitialData, Source };

const char* to_string(ProblemCase c);
ProblemCase problem_case_from_string(const std::string& s);

struct Mode {
  double lambda = 0.0;
  /// Expansion coefficient of u0 (or f) times the boundary trace of the
  /// eigenfunction at the observation point.
  double weight = 0.0;
};

struct SpectralProblem {
  std::vector<Mode> modes;
  ProblemCase problem_case = ProblemCase::InitialData;
  double source_exponent = 0.0;  // a in sigma(s) = c0 s^a / Gamma(a + 1)
  double source_scale = 1.0;     // c0
  std::optional<double> ref_u0_x0;
  std::optional<double> ref_Au0_x0;
  std::optional<double> ref_f_x0;

  void validate() const;

  double weight_sum() const;
  double weighted_lambda_sum() const;
};

struct TraceSample {
  std::vector<double> times;
  std::vector<double> values;
  double T0 = 0.0;

  std::size_t size() const { return times.size(); }
  void validate() const;
};

/// Which evaluator backs the per-mode kernels. Auto uses the series and
/// switches to contour quadrature where the series is out of its domain.
enum class KernelMethod { Auto, Series, Contour };

double trace_initial(const SpectralProblem& problem, const OrderSpec& spec, double t,
                     KernelMethod method = KernelMethod::Auto);
double trace_source(const SpectralProblem& problem, const OrderSpec& spec, double t,
                    KernelMethod method = KernelMethod::Auto);
/// Dispatches on problem.problem_case.
double trace(const SpectralProblem& problem, const OrderSpec& spec, double t,
             KernelMethod method = KernelMethod::Auto);

double laplace_trace(const SpectralProblem& problem, const OrderSpec& spec, double p);

/// Two-term small-time expansion of the trace:
///   InitialData: u0 - Au0 (t^{a_N} / Gamma(a_N + 1) - sum_i r_i t^{2a_N - a_i} / Gamma(2a_N - a_i + 1))
///   Source:      c0 f (t^{a_N + a} / Gamma(a_N + a + 1) - sum_i r_i t^{2a_N - a_i + a} / Gamma(...))
/// with weights divided by r_N and u0, Au0, f taken from the modes.
double two_term_expansion(const SpectralProblem& problem, const OrderSpec& spec, double t);

enum class ExampleCase { I, II };

/// One mode, lambda = pi^2 + 1, unit weight, initial-data problem.
SpectralProblem build_example_4_1();

/// Orders for the single-mode example. Case I takes one order with unit
/// weight; case II takes two orders with weights (r1, 1).
OrderSpec example_4_1_orders(ExampleCase c, std::span<const double> alphas, double r1 = 0.5);

/// Four-mode initial-data problem (case I) or five-mode source problem with
/// sigma = 1 (case II) on the unit square observed at the corner.
SpectralProblem build_example_4_2(ExampleCase c);

/// n samples at t_k = k T0 / n, k = 1..n.
TraceSample sample_trace(const SpectralProblem& problem, const OrderSpec& spec, double T0,
                         int n, KernelMethod method = KernelMethod::Auto);

/// CSV with header `t,g` and 17 significant digits.
void write_trace_csv(std::ostream& out, const TraceSample& sample);
/// Reads the format written by write_trace_csv; T0 is the last time.
TraceSample read_trace_csv(std::istream& in);

}  // namespace fracorder
