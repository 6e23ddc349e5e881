#pragma once

// Self-check suite: special-function identities, series/contour agreement,
// Laplace-domain asymptotics, and gradient consistency.

#include <cstdint>
#include <string>
#include <vector>

#include "fracorder/forward.hpp"

namespace fracorder {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// The quantity compared against `tolerance` (an error or a ratio).
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct CheckOptions {
  /// Relative error injected into every Gamma value of the series engine.
  double gamma_perturbation = 0.0;
  std::uint64_t seed = 20240611;
  int draws = 50;
};

CheckResult check_gamma_values();
/// E_{1,1}(z) = e^z on [-30, 0].
CheckResult check_ml_exponential(const CheckOptions& options = {});
/// E_{1/2,1}(-x) = e^{x^2} erfc(x).
CheckResult check_ml_erfc(const CheckOptions& options = {});
/// E_{1,2}(z) = (e^z - 1) / z.
CheckResult check_ml_e12(const CheckOptions& options = {});
/// One-argument multinomial function against the two-parameter function.
CheckResult check_mml_reduction(const CheckOptions& options = {});
/// S1 and S2 by series and by contour on the 3 x 3 x 4 grid.
CheckResult check_oracle_grid();
CheckResult check_normalize_scaling(const CheckOptions& options = {});
CheckResult check_derivative_identity();
/// Numerical Laplace transform of the single-mode trace against the closed form.
CheckResult check_laplace_consistency();
/// p * laplace_trace(p) against sum w_n at p = 1e6.
CheckResult check_initial_value_recovery();
/// (sum r_k p^{alpha_k}) p^{a+1} laplace_trace(p) / c0 at p = 1e8 against f(x0).
CheckResult check_step2_laplace();
/// |R(t)| / t^{2 alpha_N} at t in {1e-8, 1e-7, 1e-6}; measured is max / min.
CheckResult check_remainder_order(ExampleCase c);
/// Model and objective gradients against central differences.
CheckResult check_gradients(const CheckOptions& options = {});
CheckResult check_physical_roundtrip(const CheckOptions& options = {});
/// Frozen exponents: the optimizer must land on the linear least-squares amplitudes.
CheckResult check_frozen_exponents();

std::vector<CheckResult> run_checks(const CheckOptions& options = {});

}  // namespace fracorder
