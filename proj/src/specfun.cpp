#include "fracorder/specfun.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fracorder/errors.hpp"

namespace fracorder {

void OrderSpec::validate() const {
  if (alphas.empty()) throw DomainError("OrderSpec: at least one order required");
  if (alphas.size() != weights.size())
    throw DomainError("OrderSpec: orders and weights differ in length");
  double prev = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double a = alphas[i];
    if (!std::isfinite(a) || a <= prev || a >= 1.0)
      throw DomainError("OrderSpec: orders must satisfy 0 < a_1 < ... < a_N < 1");
    prev = a;
    if (!std::isfinite(weights[i]) || weights[i] <= 0.0)
      throw DomainError("OrderSpec: weights must be positive");
  }
}

OrderSpec OrderSpec::single(double alpha, double weight) {
  OrderSpec spec{{alpha}, {weight}};
  spec.validate();
  return spec;
}

void MLArgs::validate() const {
  if (betas.empty()) throw DomainError("MLArgs: at least one argument required");
  if (betas.size() > 4) throw DomainError("MLArgs: at most four arguments supported");
  if (betas.size() != zs.size())
    throw DomainError("MLArgs: betas and zs differ in length");
  if (!std::isfinite(beta0) || beta0 <= 0.0)
    throw DomainError("MLArgs: beta0 must be positive");
  for (std::size_t j = 0; j < betas.size(); ++j) {
    if (!(betas[j] > 0.0 && betas[j] < 1.0))
      throw DomainError("MLArgs: betas must lie in (0, 1)");
    if (!std::isfinite(zs[j]) || zs[j] > 0.0)
      throw DomainError("MLArgs: arguments must be non-positive");
    if (-zs[j] > kZMax)
      throw DomainError("MLArgs: |z| = " + std::to_string(-zs[j]) +
                        " exceeds the series limit");
  }
}

void ContourSpec::validate() const {
  using std::numbers::pi;
  if (!(theta > pi / 2 && theta < pi))
    throw DomainError("ContourSpec: theta must lie in (pi/2, pi)");
  if (!(delta > 0.0)) throw DomainError("ContourSpec: delta must be positive");
  if (n_radial < 16) throw DomainError("ContourSpec: n_radial must be >= 16");
  if (!(r_max > delta)) throw DomainError("ContourSpec: r_max must exceed delta");
}

ContourSpec ContourSpec::defaults_for(double t) {
  if (!(t > 0.0)) throw DomainError("ContourSpec: t must be positive");
  ContourSpec c;
  c.theta = 5.0 * std::numbers::pi / 6.0;
  // delta ~ 1/t keeps |exp(t p)| = O(1) on the arc for every t.
  c.delta = 1.0 / t;
  c.r_max = std::max(std::log(1e18) / (t * -std::cos(c.theta)), 2.0 * c.delta);
  c.n_radial = 400;
  return c;
}

double gamma(double x) {
  if (!(x > 0.0)) throw DomainError("gamma: argument must be positive");
  return std::tgamma(x);
}

NormalizedSpec normalize_spec(const OrderSpec& spec, double lambda) {
  spec.validate();
  const double rn = spec.leading_weight();
  NormalizedSpec out;
  out.spec.alphas = spec.alphas;
  out.spec.weights.reserve(spec.size());
  for (double w : spec.weights) out.spec.weights.push_back(w / rn);
  out.spec.weights.back() = 1.0;
  out.lambda = lambda / rn;
  out.kernel_scale = 1.0 / rn;
  return out;
}

}  // namespace fracorder
