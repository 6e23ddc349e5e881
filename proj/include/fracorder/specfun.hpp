#pragma once

// Special-function kernels for multi-term time-fractional relaxation:
// Gamma, two-parameter and multinomial Mittag-Leffler functions, and the
// per-mode solution kernels S1/S2 evaluated both by power series and by
// contour quadrature of their Laplace transforms.

#include <optional>
#include <span>
#include <vector>

namespace fracorder {

/// Largest |z| admitted by the Mittag-Leffler series evaluators.
inline constexpr double kZMax = 40.0;

/// Fractional orders 0 < alphas[0] < ... < alphas[N-1] < 1 with positive
/// weights, one per order.
struct OrderSpec {
  std::vector<double> alphas;
  std::vector<double> weights;

  std::size_t size() const { return alphas.size(); }
  double leading_order() const { return alphas.back(); }
  double leading_weight() const { return weights.back(); }

  /// Throws DomainError when an invariant is violated.
  void validate() const;

  static OrderSpec single(double alpha, double weight = 1.0);
};

/// Arguments of E_{(betas), beta0}(zs).
struct MLArgs {
  double beta0 = 1.0;
  std::vector<double> betas;
  std::vector<double> zs;

  void validate() const;
};

/// The contour gamma(delta, theta): an arc of radius delta with
/// |arg p| <= theta and two rays r e^{+-i theta}, r in [delta, r_max].
struct ContourSpec {
  double theta = 0.0;
  double delta = 0.0;
  int n_radial = 400;
  double r_max = 0.0;

  void validate() const;

  /// theta = 5 pi / 6, delta = 1/t, r_max such that
  /// exp(t r_max cos theta) < 1e-18, 400 geometrically graded ray nodes.
  static ContourSpec defaults_for(double t);
};

struct NormalizedSpec {
  OrderSpec spec;
  double lambda = 0.0;
  double kernel_scale = 1.0;
};

double gamma(double x);

/// E_{alpha,beta}(z) for alpha in (0, 2), z in [-kZMax, 0].
double ml2(double alpha, double beta, double z);

/// Multinomial Mittag-Leffler function with m <= 4 non-positive arguments.
double mml(const MLArgs& args);

/// Relaxation kernel S1(t) of one mode; `spec` must have unit leading weight.
double s1_kernel_series(double lambda, const OrderSpec& spec, double t);

/// Source kernel S2(t) of one mode; `spec` must have unit leading weight.
double s2_kernel_series(double lambda, const OrderSpec& spec, double t);

/// Convolution of S2 with s^a / Gamma(a + 1) on (0, t).
double s2_kernel_int_series(double lambda, const OrderSpec& spec, double a,
                            double t);

/// Contour-quadrature counterparts; these accept any positive weights.
double s1_kernel_contour(double lambda, const OrderSpec& spec, double t,
                         const std::optional<ContourSpec>& contour = {});
double s2_kernel_contour(double lambda, const OrderSpec& spec, double t,
                         const std::optional<ContourSpec>& contour = {});
double s2_kernel_int_contour(double lambda, const OrderSpec& spec, double a,
                             double t,
                             const std::optional<ContourSpec>& contour = {});

/// Divides the equation by the leading weight r_N.
NormalizedSpec normalize_spec(const OrderSpec& spec, double lambda);

namespace detail {

/// Knobs of the series engine. `gamma_perturbation` multiplies every Gamma
/// value by (1 + gamma_perturbation); it exists for sensitivity self-checks.
struct SeriesOptions {
  int max_shells_single = 20000;
  int max_shells_multi = 3000;
  long max_terms = 5'000'000;
  /// Multinomial series needing more terms than this in extended precision
  /// are reported as out of domain instead.
  long max_extended_terms = 200'000;
  int max_precision_bits = 8192;
  double gamma_perturbation = 0.0;
};

enum class MlRoute { Trivial, DoubleSeries, ExtendedSeries, Integral };

struct MlEvaluation {
  double value = 0.0;
  MlRoute route = MlRoute::Trivial;
  int shells = 0;
  int precision_bits = 53;
};

MlEvaluation ml2_eval(double alpha, double beta, double z,
                      const SeriesOptions& options = {});
MlEvaluation mml_eval(const MLArgs& args, const SeriesOptions& options = {});

/// E_{alpha,beta}(z) for 0 < alpha < 1 and z < 0 by quadrature of its
/// real-axis integral representation.
double ml2_integral(double alpha, double beta, double z);

/// 1 / Gamma(x) for any real x (zero at the poles).
double rgamma(double x);

}  // namespace detail
}  // namespace fracorder
