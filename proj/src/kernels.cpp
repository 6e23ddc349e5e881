#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fracorder/errors.hpp"
#include "fracorder/specfun.hpp"

namespace fracorder {
namespace {

using cplx = std::complex<double>;

// The series forms assume r_N = 1; the Laplace-domain forms take any weights.
void check_mode(double lambda, const OrderSpec& spec, double t, bool unit_leading = true) {
  spec.validate();
  if (unit_leading && std::abs(spec.leading_weight() - 1.0) > 1e-12)
    throw std::invalid_argument("kernel: leading weight must be 1; call normalize_spec first");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("kernel: lambda must be positive");
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("kernel: t must be positive");
}

void check_source_exponent(double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw DomainError("kernel: source exponent must lie in [0, 1]");
}

MLArgs kernel_args(double lambda, const OrderSpec& spec, double t, double beta0) {
  const double an = spec.leading_order();
  MLArgs args;
  args.beta0 = beta0;
  args.betas.push_back(an);
  args.zs.push_back(-lambda * std::pow(t, an));
  for (std::size_t i = 0; i + 1 < spec.size(); ++i) {
    const double d = an - spec.alphas[i];
    args.betas.push_back(d);
    args.zs.push_back(-spec.weights[i] * std::pow(t, d));
  }
  return args;
}

// sum_i r_i p^{alpha_i} on the principal branch.
cplx symbol(const OrderSpec& spec, cplx p) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) s += spec.weights[i] * std::pow(p, spec.alphas[i]);
  return s;
}

// Real inverse Laplace transform of F at t for F(conj p) = conj F(p): only
// the upper half of the contour is integrated and Im(U) / pi returned. Each
// piece (arc by the midpoint rule, ray by the trapezoid rule in ln r) gets
// one Richardson step against the half-resolution rule.
template <class Transform>
double invert(double t, const ContourSpec& c, Transform&& F) {
  c.validate();
  const int n = c.n_radial;
  const int half = n / 2;

  auto arc = [&](int nodes) {
    const double h = c.theta / nodes;
    cplx acc = 0.0;
    for (int j = 0; j < nodes; ++j) {
      const cplx e = std::polar(1.0, (j + 0.5) * h);
      const cplx p = c.delta * e;
      acc += std::exp(t * p) * F(p) * cplx(0.0, 1.0) * p;
    }
    return acc * h;
  };

  const cplx dir = std::polar(1.0, c.theta);
  const double u0 = std::log(c.delta);
  const double span = std::log(c.r_max) - u0;
  auto ray_node = [&](double u) {
    const cplx p = std::exp(u) * dir;
    return std::exp(t * p) * F(p) * p;
  };
  auto ray = [&](int nodes, cplx* tail) {
    const double h = span / nodes;
    cplx acc = 0.5 * (ray_node(u0) + ray_node(u0 + span));
    for (int j = 1; j < nodes; ++j) acc += ray_node(u0 + j * h);
    if (tail) *tail = 0.5 * h * (ray_node(u0 + (nodes - 1) * h) + ray_node(u0 + span));
    return acc * h;
  };

  const double w = static_cast<double>(n) / half;
  const double w2 = w * w;
  cplx tail = 0.0;
  const cplx arc_fine = arc(n);
  const cplx arc_coarse = arc(half);
  const cplx ray_fine = ray(n, &tail);
  const cplx ray_coarse = ray(half, nullptr);
  const cplx u = (w2 * arc_fine - arc_coarse) / (w2 - 1.0) + (w2 * ray_fine - ray_coarse) / (w2 - 1.0);
  const double value = u.imag() / std::numbers::pi;
  const double remainder = std::abs(tail) / std::numbers::pi;
  if (!std::isfinite(value) || remainder > 1e-8 * std::abs(value))
    throw AccuracyError("contour quadrature: truncated ray contributes " +
                        std::to_string(remainder) + " against a value of " +
                        std::to_string(value));
  return value;
}

ContourSpec resolve(const std::optional<ContourSpec>& contour, double t) {
  return contour ? *contour : ContourSpec::defaults_for(t);
}

}  // namespace

double s1_kernel_series(double lambda, const OrderSpec& spec, double t) {
  check_mode(lambda, spec, t);
  const double an = spec.leading_order();
  return 1.0 - lambda * std::pow(t, an) * mml(kernel_args(lambda, spec, t, 1.0 + an));
}

double s2_kernel_series(double lambda, const OrderSpec& spec, double t) {
  check_mode(lambda, spec, t);
  const double an = spec.leading_order();
  return std::pow(t, an - 1.0) * mml(kernel_args(lambda, spec, t, an));
}

double s2_kernel_int_series(double lambda, const OrderSpec& spec, double a, double t) {
  check_mode(lambda, spec, t);
  check_source_exponent(a);
  const double an = spec.leading_order();
  return std::pow(t, an + a) * mml(kernel_args(lambda, spec, t, an + a + 1.0));
}

double s1_kernel_contour(double lambda, const OrderSpec& spec, double t,
                         const std::optional<ContourSpec>& contour) {
  check_mode(lambda, spec, t, false);
  return invert(t, resolve(contour, t), [&](cplx p) {
    cplx num = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i)
      num += spec.weights[i] * std::pow(p, spec.alphas[i] - 1.0);
    return num / (lambda + symbol(spec, p));
  });
}

double s2_kernel_contour(double lambda, const OrderSpec& spec, double t,
                         const std::optional<ContourSpec>& contour) {
  check_mode(lambda, spec, t, false);
  return invert(t, resolve(contour, t),
                [&](cplx p) { return 1.0 / (lambda + symbol(spec, p)); });
}

double s2_kernel_int_contour(double lambda, const OrderSpec& spec, double a, double t,
                             const std::optional<ContourSpec>& contour) {
  check_mode(lambda, spec, t, false);
  check_source_exponent(a);
  return invert(t, resolve(contour, t), [&](cplx p) {
    return std::pow(p, -a - 1.0) / (lambda + symbol(spec, p));
  });
}

}  // namespace fracorder
