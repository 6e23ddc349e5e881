#pragma once

// Small-time regressors for boundary traces in a generic (c, beta)
// parametrization, and the map between fitted and physical parameters.

#include <string>
#include <vector>

#include "fracorder/forward.hpp"
#include "fracorder/specfun.hpp"

namespace fracorder {

enum class ModelKind { Polynomial, Rational };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

/// Parameter layout, with P(t) = sum_i d_i t^{beta_i}:
///   Polynomial, InitialData: c = (c0, c1..cM),  f = c0 + sum c_i t^{beta_i}
///   Polynomial, Source:      c = (c1..cM),      f = sum c_i t^{beta_i}
///   Rational,   InitialData: c = (c0, d1..dM),  f = c0 / (1 + P)
///   Rational,   Source:      c = (cA, d1..dM),  f = cA (1 - 1 / (1 + P))
struct ModelParams {
  ModelKind kind = ModelKind::Polynomial;
  ProblemCase problem_case = ProblemCase::InitialData;
  std::vector<double> c;
  std::vector<double> beta;

  std::size_t n_terms() const { return beta.size(); }
  std::size_t n_params() const { return c.size() + beta.size(); }
  /// Index into c of the coefficient multiplying t^{beta_i}.
  std::size_t term_index(std::size_t i) const { return c.size() - beta.size() + i; }

  void validate() const;
};

/// Number of entries of c for a model with M power terms.
std::size_t amplitude_count(ModelKind kind, ProblemCase problem_case, std::size_t M);

/// Recovered physical quantities. `orders` holds the raw recovered orders and
/// weights (r_N = 1) and is not validated; `admissible` tells whether they
/// satisfy the ordering and positivity constraints.
struct PhysicalParams {
  OrderSpec orders;
  double amplitude = 0.0;
  double constant = 0.0;
  bool admissible = false;
};

double eval(const ModelParams& params, double t);

/// Partial derivatives ordered as (c..., beta...).
std::vector<double> grad(const ModelParams& params, double t);

/// Coefficients e_i of t^{beta_i} in the first-order expansion of the model
/// (e_i = c_i for polynomials, -c0 d_i and cA d_i for the rational forms).
std::vector<double> leading_coefficients(const ModelParams& params);

/// Reads orders and amplitude off the fitted exponents. `a` is the source
/// exponent, so that alpha_N = beta_1 - a and alpha_1 = 2 beta_1 - beta_2 - a.
PhysicalParams to_physical(const ModelParams& params, double a = 0.0);

ModelParams from_physical(const PhysicalParams& phys, ModelKind kind, ProblemCase problem_case,
                          double a = 0.0);

}  // namespace fracorder
