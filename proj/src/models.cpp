#include "fracorder/models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fracorder/errors.hpp"

namespace fracorder {

const char* to_string(ModelKind k) { return k == ModelKind::Polynomial ? "fp" : "fr"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "fp" || s == "polynomial") return ModelKind::Polynomial;
  if (s == "fr" || s == "rational") return ModelKind::Rational;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

std::size_t amplitude_count(ModelKind kind, ProblemCase problem_case, std::size_t M) {
  if (kind == ModelKind::Polynomial && problem_case == ProblemCase::Source) return M;
  return M + 1;
}

void ModelParams::validate() const {
  if (beta.empty()) throw DomainError("ModelParams: at least one exponent required");
  if (c.size() != amplitude_count(kind, problem_case, beta.size()))
    throw DomainError("ModelParams: wrong number of amplitudes");
  double prev = 0.0;
  for (double b : beta) {
    if (!(b > prev && b < 2.0))
      throw DomainError("ModelParams: exponents must be increasing within (0, 2)");
    prev = b;
  }
  for (double v : c)
    if (!std::isfinite(v)) throw DomainError("ModelParams: amplitudes must be finite");
}

namespace {

void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("model: t must be positive");
}

}  // namespace

double eval(const ModelParams& params, double t) {
  check_time(t);
  const std::size_t M = params.n_terms();
  const std::size_t off = params.c.size() - M;
  double p = 0.0;
  for (std::size_t i = 0; i < M; ++i) p += params.c[off + i] * std::pow(t, params.beta[i]);
  if (params.kind == ModelKind::Polynomial)
    return params.problem_case == ProblemCase::InitialData ? params.c[0] + p : p;
  if (params.problem_case == ProblemCase::InitialData) return params.c[0] / (1.0 + p);
  return params.c[0] * p / (1.0 + p);
}

std::vector<double> grad(const ModelParams& params, double t) {
  check_time(t);
  const std::size_t M = params.n_terms();
  const std::size_t nc = params.c.size();
  const std::size_t off = nc - M;
  const double lt = std::log(t);
  std::vector<double> g(nc + M, 0.0);
  std::vector<double> tb(M);
  double p = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    tb[i] = std::pow(t, params.beta[i]);
    p += params.c[off + i] * tb[i];
  }

  if (params.kind == ModelKind::Polynomial) {
    if (off == 1) g[0] = 1.0;
    for (std::size_t i = 0; i < M; ++i) {
      g[off + i] = tb[i];
      g[nc + i] = params.c[off + i] * tb[i] * lt;
    }
    return g;
  }

  const double q = 1.0 + p;
  const double q2 = q * q;
  // f = c0 / q or cA p / q = cA (1 - 1/q); d f / d p = -c0 / q^2 or cA / q^2.
  const double dfdp = params.problem_case == ProblemCase::InitialData ? -params.c[0] / q2
                                                                       : params.c[0] / q2;
  g[0] = params.problem_case == ProblemCase::InitialData ? 1.0 / q : p / q;
  for (std::size_t i = 0; i < M; ++i) {
    g[off + i] = dfdp * tb[i];
    g[nc + i] = dfdp * params.c[off + i] * tb[i] * lt;
  }
  return g;
}

std::vector<double> leading_coefficients(const ModelParams& params) {
  const std::size_t M = params.n_terms();
  const std::size_t off = params.c.size() - M;
  std::vector<double> e(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double ci = params.c[off + i];
    if (params.kind == ModelKind::Polynomial)
      e[i] = ci;
    else if (params.problem_case == ProblemCase::InitialData)
      e[i] = -params.c[0] * ci;
    else
      e[i] = params.c[0] * ci;
  }
  return e;
}

PhysicalParams to_physical(const ModelParams& params, double a) {
  params.validate();
  const std::size_t M = params.n_terms();
  if (M > 2) throw DomainError("to_physical: at most two power terms supported");
  const std::vector<double> e = leading_coefficients(params);
  const double b1 = params.beta[0];
  const double g1 = std::tgamma(b1 + 1.0);
  const bool initial = params.problem_case == ProblemCase::InitialData;

  PhysicalParams out;
  out.amplitude = initial ? -e[0] * g1 : e[0] * g1;
  out.constant = initial ? params.c[0] : 0.0;
  const double an = b1 - a;
  if (!(an > 0.0))
    throw IdentifiabilityError("to_physical: recovered leading order " + std::to_string(an) +
                               " is not positive");
  if (M == 1) {
    out.orders = OrderSpec{{an}, {1.0}};
  } else {
    const double b2 = params.beta[1];
    const double a1 = 2.0 * b1 - b2 - a;
    if (!(a1 > 0.0))
      throw IdentifiabilityError("to_physical: recovered order alpha_1 = " + std::to_string(a1) +
                                 " is not positive");
    const double r1 = -e[1] * std::tgamma(b2 + 1.0) / (e[0] * g1);
    out.orders = OrderSpec{{a1, an}, {r1, 1.0}};
  }
  try {
    out.orders.validate();
    out.admissible = std::isfinite(out.amplitude);
  } catch (const DomainError&) {
    out.admissible = false;
  }
  return out;
}

ModelParams from_physical(const PhysicalParams& phys, ModelKind kind, ProblemCase problem_case,
                          double a) {
  phys.orders.validate();
  const std::size_t N = phys.orders.size();
  if (N > 2) throw DomainError("from_physical: at most two orders supported");
  if (std::abs(phys.orders.leading_weight() - 1.0) > 1e-12)
    throw DomainError("from_physical: leading weight must be 1");
  if (!(a >= 0.0 && a <= 1.0)) throw DomainError("from_physical: source exponent outside [0, 1]");
  const bool initial = problem_case == ProblemCase::InitialData;
  const double an = phys.orders.leading_order();
  const double A = phys.amplitude;

  ModelParams m;
  m.kind = kind;
  m.problem_case = problem_case;
  m.beta.push_back(an + a);
  std::vector<double> e{(initial ? -A : A) / std::tgamma(an + a + 1.0)};
  if (N == 2) {
    const double b2 = 2.0 * an - phys.orders.alphas[0] + a;
    m.beta.push_back(b2);
    e.push_back((initial ? A : -A) * phys.orders.weights[0] / std::tgamma(b2 + 1.0));
  }

  if (kind == ModelKind::Polynomial) {
    if (initial) m.c.push_back(phys.constant);
    m.c.insert(m.c.end(), e.begin(), e.end());
  } else if (initial) {
    if (phys.constant == 0.0)
      throw DomainError("from_physical: rational initial-data model needs a nonzero constant");
    m.c.push_back(phys.constant);
    for (double ei : e) m.c.push_back(-ei / phys.constant);
  } else {
    if (A == 0.0) throw DomainError("from_physical: rational source model needs nonzero amplitude");
    m.c.push_back(A);
    for (double ei : e) m.c.push_back(ei / A);
  }
  m.validate();
  return m;
}

}  // namespace fracorder
