#include "fracorder/forward.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fracorder/errors.hpp"

namespace fracorder {

const char* to_string(ProblemCase c) {
  return c == ProblemCase::InitialData ? "initial" : "source";
}

ProblemCase problem_case_from_string(const std::string& s) {
  if (s == "initial" || s == "initial_data" || s == "InitialData") return ProblemCase::InitialData;
  if (s == "source" || s == "Source") return ProblemCase::Source;
  throw std::invalid_argument("unknown problem case '" + s + "'");
}

void SpectralProblem::validate() const {
  if (modes.empty()) throw DomainError("SpectralProblem: no modes");
  double prev = 0.0;
  for (const Mode& m : modes) {
    if (!(m.lambda > 0.0) || !std::isfinite(m.lambda))
      throw DomainError("SpectralProblem: eigenvalues must be positive");
    if (m.lambda < prev) throw DomainError("SpectralProblem: eigenvalues must be nondecreasing");
    if (!std::isfinite(m.weight)) throw DomainError("SpectralProblem: weights must be finite");
    prev = m.lambda;
  }
  if (problem_case == ProblemCase::Source) {
    if (!(source_exponent >= 0.0 && source_exponent <= 1.0))
      throw DomainError("SpectralProblem: source exponent must lie in [0, 1]");
    if (!std::isfinite(source_scale)) throw DomainError("SpectralProblem: bad source scale");
  }
}

double SpectralProblem::weight_sum() const {
  double s = 0.0;
  for (const Mode& m : modes) s += m.weight;
  return s;
}

double SpectralProblem::weighted_lambda_sum() const {
  double s = 0.0;
  for (const Mode& m : modes) s += m.lambda * m.weight;
  return s;
}

void TraceSample::validate() const {
  if (times.empty()) throw DomainError("TraceSample: empty");
  if (times.size() != values.size()) throw DomainError("TraceSample: length mismatch");
  if (!(T0 > 0.0)) throw DomainError("TraceSample: T0 must be positive");
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev)) throw DomainError("TraceSample: times must be positive and increasing");
    prev = t;
  }
}

namespace {

template <class Series, class Contour>
double kernel(KernelMethod method, Series&& series, Contour&& contour) {
  switch (method) {
    case KernelMethod::Series:
      return series();
    case KernelMethod::Contour:
      return contour();
    case KernelMethod::Auto:
      try {
        return series();
      } catch (const DomainError&) {
        return contour();
      }
  }
  return series();
}

}  // namespace

double trace_initial(const SpectralProblem& problem, const OrderSpec& spec, double t,
                     KernelMethod method) {
  if (problem.problem_case != ProblemCase::InitialData)
    throw std::invalid_argument("trace_initial: problem is not an initial-data problem");
  problem.validate();
  double g = 0.0;
  for (const Mode& m : problem.modes) {
    const NormalizedSpec ns = normalize_spec(spec, m.lambda);
    g += m.weight * kernel(
                        method, [&] { return s1_kernel_series(ns.lambda, ns.spec, t); },
                        [&] { return s1_kernel_contour(ns.lambda, ns.spec, t); });
  }
  return g;
}

double trace_source(const SpectralProblem& problem, const OrderSpec& spec, double t,
                    KernelMethod method) {
  if (problem.problem_case != ProblemCase::Source)
    throw std::invalid_argument("trace_source: problem is not a source problem");
  problem.validate();
  const double a = problem.source_exponent;
  double g = 0.0;
  for (const Mode& m : problem.modes) {
    const NormalizedSpec ns = normalize_spec(spec, m.lambda);
    g += m.weight * ns.kernel_scale *
         kernel(
             method, [&] { return s2_kernel_int_series(ns.lambda, ns.spec, a, t); },
             [&] { return s2_kernel_int_contour(ns.lambda, ns.spec, a, t); });
  }
  return problem.source_scale * g;
}

double trace(const SpectralProblem& problem, const OrderSpec& spec, double t,
             KernelMethod method) {
  return problem.problem_case == ProblemCase::InitialData
             ? trace_initial(problem, spec, t, method)
             : trace_source(problem, spec, t, method);
}

double laplace_trace(const SpectralProblem& problem, const OrderSpec& spec, double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("laplace_trace: p must be positive");
  problem.validate();
  spec.validate();
  double q = 0.0;
  double q_over_p = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    q += spec.weights[k] * std::pow(p, spec.alphas[k]);
    q_over_p += spec.weights[k] * std::pow(p, spec.alphas[k] - 1.0);
  }
  double s = 0.0;
  for (const Mode& m : problem.modes) s += m.weight / (m.lambda + q);
  if (problem.problem_case == ProblemCase::InitialData) return q_over_p * s;
  return problem.source_scale * std::pow(p, -problem.source_exponent - 1.0) * s;
}

double two_term_expansion(const SpectralProblem& problem, const OrderSpec& spec, double t) {
  problem.validate();
  spec.validate();
  const double rn = spec.leading_weight();
  const double an = spec.leading_order();
  const double shift =
      problem.problem_case == ProblemCase::Source ? problem.source_exponent : 0.0;
  double bracket = std::pow(t, an + shift) / (rn * std::tgamma(an + shift + 1.0));
  for (std::size_t i = 0; i + 1 < spec.size(); ++i) {
    const double e = 2.0 * an - spec.alphas[i] + shift;
    bracket -= spec.weights[i] * std::pow(t, e) / (rn * rn * std::tgamma(e + 1.0));
  }
  if (problem.problem_case == ProblemCase::InitialData)
    return problem.weight_sum() - problem.weighted_lambda_sum() * bracket;
  return problem.source_scale * problem.weight_sum() * bracket;
}

SpectralProblem build_example_4_1() {
  using std::numbers::pi;
  SpectralProblem p;
  p.modes = {{pi * pi + 1.0, 1.0}};
  p.problem_case = ProblemCase::InitialData;
  p.ref_u0_x0 = 1.0;
  p.ref_Au0_x0 = pi * pi + 1.0;
  return p;
}

OrderSpec example_4_1_orders(ExampleCase c, std::span<const double> alphas, double r1) {
  OrderSpec spec;
  if (c == ExampleCase::I) {
    if (alphas.size() != 1) throw DomainError("single-mode case (i) takes one order");
    spec = OrderSpec{{alphas[0]}, {1.0}};
  } else {
    if (alphas.size() != 2) throw DomainError("single-mode case (ii) takes two orders");
    spec = OrderSpec{{alphas[0], alphas[1]}, {r1, 1.0}};
  }
  spec.validate();
  return spec;
}

SpectralProblem build_example_4_2(ExampleCase c) {
  using std::numbers::pi;
  const double l1 = 2.0 * pi * pi;
  SpectralProblem p;
  if (c == ExampleCase::I) {
    p.modes = {{l1, 1.0}, {5.0 * pi * pi, 0.25}, {5.0 * pi * pi, 0.25}, {8.0 * pi * pi, 0.125}};
    p.problem_case = ProblemCase::InitialData;
    p.ref_u0_x0 = 1.625;
    p.ref_Au0_x0 = 5.5 * pi * pi;
  } else {
    p.modes = {{l1, 1.0},
               {5.0 * pi * pi, 0.5},
               {5.0 * pi * pi, 0.5},
               {10.0 * pi * pi, 0.25},
               {10.0 * pi * pi, 0.25}};
    p.problem_case = ProblemCase::Source;
    p.source_exponent = 0.0;
    p.source_scale = 1.0;
    p.ref_f_x0 = 2.5;
  }
  return p;
}

TraceSample sample_trace(const SpectralProblem& problem, const OrderSpec& spec, double T0,
                         int n, KernelMethod method) {
  if (n < 2) throw DomainError("sample_trace: need at least two samples");
  if (!(T0 > 0.0) || !std::isfinite(T0)) throw DomainError("sample_trace: T0 must be positive");
  TraceSample s;
  s.T0 = T0;
  s.times.reserve(n);
  s.values.reserve(n);
  for (int k = 1; k <= n; ++k) {
    const double t = k * T0 / n;
    s.times.push_back(t);
    s.values.push_back(trace(problem, spec, t, method));
  }
  return s;
}

void write_trace_csv(std::ostream& out, const TraceSample& sample) {
  out << "t,g\n";
  char buf[64];
  for (std::size_t k = 0; k < sample.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,", sample.times[k]);
    out << buf;
    std::snprintf(buf, sizeof buf, "%.17g\n", sample.values[k]);
    out << buf;
  }
}

TraceSample read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,g") throw std::runtime_error("trace CSV: expected header 't,g'");
  TraceSample s;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("trace CSV: missing comma on line " + std::to_string(row));
    try {
      s.times.push_back(std::stod(line.substr(0, comma)));
      s.values.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::logic_error&) {
      throw std::runtime_error("trace CSV: bad number on line " + std::to_string(row));
    }
  }
  if (s.times.empty()) throw std::runtime_error("trace CSV: no data rows");
  s.T0 = s.times.back();
  s.validate();
  return s;
}

}  // namespace fracorder
