#include "fracorder/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fracorder/errors.hpp"

namespace fracorder {

std::vector<std::pair<double, double>> FitConfig::bounds() const {
  if (!beta_bounds.empty()) return beta_bounds;
  return std::vector<std::pair<double, double>>(static_cast<std::size_t>(n_terms), {0.01, 1.99});
}

void FitConfig::validate() const {
  if (n_terms < 1 || n_terms > 2) throw DomainError("FitConfig: n_terms must be 1 or 2");
  if (beta_init.size() != static_cast<std::size_t>(n_terms))
    throw DomainError("FitConfig: beta_init must have n_terms entries");
  const auto b = bounds();
  if (b.size() != beta_init.size()) throw DomainError("FitConfig: one bound pair per exponent");
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!(b[i].first < b[i].second) || b[i].first <= 0.0 || b[i].second >= 2.0)
      throw DomainError("FitConfig: bounds must satisfy 0 < lo < hi < 2");
    if (!(beta_init[i] >= b[i].first && beta_init[i] <= b[i].second))
      throw DomainError("FitConfig: beta_init outside bounds");
  }
  if (max_iter < 0 || memory < 1) throw DomainError("FitConfig: bad iteration settings");
  if (!(grad_tol > 0.0) || !(min_gap >= 0.0)) throw DomainError("FitConfig: bad tolerances");
  if (c_init &&
      c_init->size() != amplitude_count(kind, problem_case, static_cast<std::size_t>(n_terms)))
    throw DomainError("FitConfig: c_init has the wrong length");
}

double objective(const TraceSample& sample, const ModelParams& params) {
  const std::size_t n = sample.size();
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = sample.values[k] - eval(params, sample.times[k]);
    s += r * r;
  }
  return 0.5 * (sample.T0 / static_cast<double>(n)) * s;
}

std::vector<double> objective_grad(const TraceSample& sample, const ModelParams& params) {
  const std::size_t n = sample.size();
  const double w = sample.T0 / static_cast<double>(n);
  std::vector<double> g(params.n_params(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = sample.times[k];
    const double r = sample.values[k] - eval(params, t);
    const std::vector<double> df = grad(params, t);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] -= w * r * df[j];
  }
  return g;
}

namespace {

constexpr double kMaxCondition = 1e12;

struct LinearSolve {
  Eigen::VectorXd coef;
  double relative_residual = 0.0;
};

// Least squares with column equilibration and a conditioning guard.
LinearSolve solve_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  Eigen::VectorXd norms = A.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < norms.size(); ++j)
    if (!(norms[j] > 0.0) || !std::isfinite(norms[j]))
      throw RankDeficiencyError("linear_init: degenerate design column");
  const Eigen::MatrixXd B = A * norms.cwiseInverse().asDiagonal();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
  const auto& sv = svd.singularValues();
  const double cond = sv[0] / sv[sv.size() - 1];
  if (!(cond <= kMaxCondition))
    throw RankDeficiencyError("linear_init: design matrix condition number " +
                              std::to_string(cond) + " exceeds 1e12");
  LinearSolve out;
  const Eigen::VectorXd z = B.colPivHouseholderQr().solve(y);
  out.coef = z.cwiseQuotient(norms);
  const double ny = y.norm();
  out.relative_residual = ny > 0.0 ? (B * z - y).norm() / ny : (B * z - y).norm();
  return out;
}

Eigen::MatrixXd power_columns(const TraceSample& sample, const std::vector<double>& beta,
                              bool constant) {
  const Eigen::Index n = static_cast<Eigen::Index>(sample.size());
  const Eigen::Index off = constant ? 1 : 0;
  Eigen::MatrixXd A(n, off + static_cast<Eigen::Index>(beta.size()));
  for (Eigen::Index k = 0; k < n; ++k) {
    const double s = sample.times[k] / sample.T0;
    if (constant) A(k, 0) = 1.0;
    for (std::size_t i = 0; i < beta.size(); ++i)
      A(k, off + static_cast<Eigen::Index>(i)) = std::pow(s, beta[i]);
  }
  return A;
}

Eigen::VectorXd values_of(const TraceSample& sample) {
  return Eigen::Map<const Eigen::VectorXd>(sample.values.data(),
                                           static_cast<Eigen::Index>(sample.size()));
}

LinearInit polynomial_init(const TraceSample& sample, const std::vector<double>& beta,
                           bool constant) {
  const LinearSolve ls = solve_least_squares(power_columns(sample, beta, constant), values_of(sample));
  LinearInit out;
  const std::size_t off = constant ? 1 : 0;
  out.c.assign(ls.coef.data(), ls.coef.data() + ls.coef.size());
  for (std::size_t i = 0; i < beta.size(); ++i) out.c[off + i] /= std::pow(sample.T0, beta[i]);
  out.relative_residual = ls.relative_residual;
  return out;
}

}  // namespace

LinearInit linear_init(const TraceSample& sample, const std::vector<double>& beta, ModelKind kind,
                       ProblemCase problem_case) {
  sample.validate();
  if (beta.empty()) throw DomainError("linear_init: no exponents");
  LinearInit out;
  const bool initial = problem_case == ProblemCase::InitialData;

  if (kind == ModelKind::Polynomial) {
    out = polynomial_init(sample, beta, initial);
  } else if (initial) {
    // 1/f = 1/c0 + sum (d_i / c0) t^{beta_i}
    Eigen::VectorXd y = values_of(sample);
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      if (y[k] == 0.0 || y[k] * y[0] < 0.0)
        throw DomainError("linear_init: rational initial-data model needs data of one sign");
      y[k] = 1.0 / y[k];
    }
    const LinearSolve ls = solve_least_squares(power_columns(sample, beta, true), y);
    const double b0 = ls.coef[0];
    out.c.push_back(1.0 / b0);
    for (std::size_t i = 0; i < beta.size(); ++i)
      out.c.push_back(ls.coef[static_cast<Eigen::Index>(i) + 1] / b0 /
                      std::pow(sample.T0, beta[i]));
    out.relative_residual = ls.relative_residual;
  } else {
    // f / (cA - f) = sum d_i t^{beta_i}, with cA read off a polynomial fit.
    const LinearInit poly = polynomial_init(sample, beta, false);
    double cA = poly.c[0] * std::tgamma(beta[0] + 1.0);
    double gmax = 0.0;
    for (double g : sample.values) gmax = std::max(gmax, std::abs(g));
    bool usable = std::isfinite(cA) && cA != 0.0;
    for (double g : sample.values)
      if (usable && !((cA - g) / cA > 0.0 && g / cA >= 0.0)) usable = false;
    if (!usable) {
      const double sign = std::accumulate(sample.values.begin(), sample.values.end(), 0.0) < 0.0
                              ? -1.0
                              : 1.0;
      cA = 2.0 * sign * (gmax > 0.0 ? gmax : 1.0);
    }
    Eigen::VectorXd y = values_of(sample);
    for (Eigen::Index k = 0; k < y.size(); ++k) y[k] = y[k] / (cA - y[k]);
    const LinearSolve ls = solve_least_squares(power_columns(sample, beta, false), y);
    out.c.push_back(cA);
    for (std::size_t i = 0; i < beta.size(); ++i)
      out.c.push_back(ls.coef[static_cast<Eigen::Index>(i)] / std::pow(sample.T0, beta[i]));
    out.relative_residual = ls.relative_residual;
  }
  out.poor_fit = !(out.relative_residual <= 1e-2);
  return out;
}

namespace {

// The optimizer works on t / T0 and g / G so that amplitudes and the
// objective are O(1) whatever the time window and data magnitude.
struct Scaling {
  double T0 = 1.0;
  double G = 1.0;

  ModelParams to_internal(const ModelParams& p) const {
    ModelParams q = p;
    const std::size_t off = q.c.size() - q.n_terms();
    if (q.kind == ModelKind::Polynomial) {
      for (std::size_t j = 0; j < off; ++j) q.c[j] /= G;
      for (std::size_t i = 0; i < q.n_terms(); ++i) q.c[off + i] *= std::pow(T0, q.beta[i]) / G;
    } else {
      q.c[0] /= G;
      for (std::size_t i = 0; i < q.n_terms(); ++i) q.c[off + i] *= std::pow(T0, q.beta[i]);
    }
    return q;
  }

  ModelParams to_external(const ModelParams& q) const {
    ModelParams p = q;
    const std::size_t off = p.c.size() - p.n_terms();
    if (p.kind == ModelKind::Polynomial) {
      for (std::size_t j = 0; j < off; ++j) p.c[j] *= G;
      for (std::size_t i = 0; i < p.n_terms(); ++i) p.c[off + i] *= G / std::pow(T0, p.beta[i]);
    } else {
      p.c[0] *= G;
      for (std::size_t i = 0; i < p.n_terms(); ++i) p.c[off + i] /= std::pow(T0, p.beta[i]);
    }
    return p;
  }

  TraceSample sample(const TraceSample& s) const {
    TraceSample out;
    out.T0 = 1.0;
    out.times.reserve(s.size());
    out.values.reserve(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      out.times.push_back(s.times[k] / T0);
      out.values.push_back(s.values[k] / G);
    }
    return out;
  }
};

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double inf_norm(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Vec pack(const ModelParams& p) {
  Vec x = p.c;
  x.insert(x.end(), p.beta.begin(), p.beta.end());
  return x;
}

void unpack(const Vec& x, ModelParams& p) {
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(p.c.size()), p.c.begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(p.c.size()), x.end(), p.beta.begin());
}

// Gradient with components that would push an active bound outward removed.
Vec projected_gradient(const Vec& x, const Vec& g, const Vec& lo, const Vec& hi) {
  Vec pg = g;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= lo[i] && g[i] > 0.0) pg[i] = 0.0;
    if (x[i] >= hi[i] && g[i] < 0.0) pg[i] = 0.0;
  }
  return pg;
}

Vec project(Vec x, const Vec& lo, const Vec& hi) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  return x;
}

struct Pair {
  Vec s;
  Vec y;
  double rho;
};

// Two-loop recursion applied to the free components of pg.
Vec lbfgs_direction(const std::deque<Pair>& mem, const Vec& pg) {
  Vec q = pg;
  std::vector<double> a(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    a[i] = mem[i].rho * dot(mem[i].s, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] -= a[i] * mem[i].y[j];
  }
  if (!mem.empty()) {
    const Pair& last = mem.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double b = mem[i].rho * dot(mem[i].y, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += mem[i].s[j] * (a[i] - b);
  }
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = pg[j] == 0.0 ? 0.0 : -q[j];
  return q;
}

void sort_and_separate(ModelParams& p, double min_gap) {
  const std::size_t M = p.n_terms();
  const std::size_t off = p.c.size() - M;
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return p.beta[i] < p.beta[j]; });
  ModelParams q = p;
  for (std::size_t i = 0; i < M; ++i) {
    q.beta[i] = p.beta[order[i]];
    q.c[off + i] = p.c[off + order[i]];
  }
  for (std::size_t i = 1; i < M; ++i)
    if (q.beta[i] < q.beta[i - 1] + min_gap) q.beta[i] = q.beta[i - 1] + min_gap;
  p = q;
}

}  // namespace

FitResult minimize(const TraceSample& sample, const FitConfig& config) {
  sample.validate();
  config.validate();
  const std::size_t M = static_cast<std::size_t>(config.n_terms);
  const auto bounds = config.bounds();

  FitResult res;
  res.T0 = sample.T0;
  res.params.kind = config.kind;
  res.params.problem_case = config.problem_case;
  res.params.beta = config.beta_init;
  res.params.c = config.c_init ? *config.c_init
                               : linear_init(sample, config.beta_init, config.kind,
                                             config.problem_case)
                                     .c;

  Scaling sc;
  sc.T0 = sample.T0;
  // Initial-data traces are dominated by their constant; their spread sets
  // the scale of the residuals.
  const double n = static_cast<double>(sample.size());
  const double mean = config.problem_case == ProblemCase::InitialData
                          ? std::accumulate(sample.values.begin(), sample.values.end(), 0.0) / n
                          : 0.0;
  double spread = 0.0;
  for (double g : sample.values) spread += (g - mean) * (g - mean);
  spread = std::sqrt(spread / n);
  sc.G = spread > 0.0 && std::isfinite(spread) ? spread : 1.0;
  const TraceSample ss = sc.sample(sample);
  const double to_J = sample.T0 * sc.G * sc.G;

  ModelParams work = sc.to_internal(res.params);
  const std::size_t nc = work.c.size();
  Vec lo(nc + M, -std::numeric_limits<double>::infinity());
  Vec hi(nc + M, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < M; ++i) {
    lo[nc + i] = config.freeze_beta ? config.beta_init[i] : bounds[i].first;
    hi[nc + i] = config.freeze_beta ? config.beta_init[i] : bounds[i].second;
  }
  if (config.nonnegative_weight && M == 2) {
    // r1 >= 0 exactly when the two power-term coefficients have opposite
    // signs; the sign of the first is taken from the starting point.
    const std::size_t j1 = work.term_index(0);
    const std::size_t j2 = work.term_index(1);
    if (work.c[j1] < 0.0) lo[j2] = 0.0;
    if (work.c[j1] > 0.0) hi[j2] = 0.0;
  }

  // Diagonal change of variables x = D y. Rational denominator coefficients
  // act on the model through the numerator scale, so they are measured in
  // units of 1 / |c0|.
  Vec D(nc + M, 1.0);
  if (config.kind == ModelKind::Rational && work.c[0] != 0.0 && std::isfinite(work.c[0]))
    for (std::size_t i = 0; i < M; ++i) D[work.term_index(i)] = 1.0 / std::abs(work.c[0]);
  for (std::size_t i = 0; i < D.size(); ++i) {
    lo[i] /= D[i];
    hi[i] /= D[i];
  }
  auto to_y = [&](Vec v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] /= D[i];
    return v;
  };

  auto value_and_grad = [&](const Vec& y, Vec& g) {
    Vec xv = y;
    for (std::size_t i = 0; i < xv.size(); ++i) xv[i] *= D[i];
    unpack(xv, work);
    g = objective_grad(ss, work);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= D[i];
    return objective(ss, work);
  };

  // Amplitudes re-solved at fixed exponents. A second coefficient held at
  // its bound stays there and only the remaining amplitudes are solved for.
  auto resolve_amplitudes = [&](const Vec& beta, bool second_pinned) {
    ModelParams trial = work;
    trial.beta = beta;
    if (second_pinned) {
      trial.c = linear_init(sample, {beta[0]}, config.kind, config.problem_case).c;
      trial.c.push_back(0.0);
    } else {
      trial.c = linear_init(sample, beta, config.kind, config.problem_case).c;
    }
    return to_y(pack(sc.to_internal(trial)));
  };

  Vec x = project(to_y(pack(work)), lo, hi);
  Vec g;
  double f = value_and_grad(x, g);
  std::deque<Pair> mem;
  Vec anchor(x.begin() + static_cast<std::ptrdiff_t>(nc), x.end());
  auto record = [&](const Vec& xs, double fs) {
    if (!config.record_history) return;
    res.objective_history.push_back(fs * to_J);
    res.beta_history.emplace_back(xs.begin() + static_cast<std::ptrdiff_t>(nc), xs.end());
  };
  record(x, f);

  Vec pg = projected_gradient(x, g, lo, hi);
  int it = 0;
  while (std::isfinite(f)) {
    if (inf_norm(pg) < config.grad_tol) {
      res.converged = true;
      break;
    }
    if (it >= config.max_iter) break;

    Vec d = lbfgs_direction(mem, pg);
    double slope = dot(d, pg);
    if (!(slope < 0.0)) {
      mem.clear();
      d = lbfgs_direction(mem, pg);
      slope = dot(d, pg);
    }
    // Steepest-descent steps are capped at 0.1 per coordinate.
    double step = mem.empty() ? std::min(1.0, 0.1 / inf_norm(d)) : 1.0;

    Vec xn;
    Vec gn;
    double fn = 0.0;
    bool accepted = false;
    for (int halving = 0; halving <= 40; ++halving, step *= 0.5) {
      xn = x;
      for (std::size_t i = 0; i < x.size(); ++i) xn[i] += step * d[i];
      xn = project(std::move(xn), lo, hi);
      Vec dx(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = xn[i] - x[i];
      fn = value_and_grad(xn, gn);
      if (!std::isfinite(fn)) continue;
      if (fn <= f + 1e-4 * dot(g, dx)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      res.status = "line search failed";
      break;
    }

    // Curvature pairs only see coordinates that are free at both ends of the
    // step; gradient changes along fixed or bound-held coordinates would
    // otherwise corrupt the Hessian scaling.
    Pair pr{Vec(x.size(), 0.0), Vec(x.size(), 0.0), 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
      const bool held = lo[i] == hi[i] || (xn[i] == x[i] && (x[i] == lo[i] || x[i] == hi[i]));
      if (held) continue;
      pr.s[i] = xn[i] - x[i];
      pr.y[i] = gn[i] - g[i];
    }
    const double sy = dot(pr.s, pr.y);
    if (sy > 1e-12 * std::sqrt(dot(pr.s, pr.s) * dot(pr.y, pr.y))) {
      pr.rho = 1.0 / sy;
      mem.push_back(std::move(pr));
      if (mem.size() > static_cast<std::size_t>(config.memory)) mem.pop_front();
    }
    x = std::move(xn);
    g = std::move(gn);
    f = fn;
    ++it;

    // Re-solve the amplitudes after a large move in the exponents, keeping
    // the result only if it does not increase the objective.
    double moved = 0.0;
    for (std::size_t i = 0; i < M; ++i) moved = std::max(moved, std::abs(x[nc + i] - anchor[i]));
    if (moved > 0.05) {
      anchor.assign(x.begin() + static_cast<std::ptrdiff_t>(nc), x.end());
      try {
        bool pinned = false;
        if (M == 2) {
          const std::size_t j2 = work.term_index(1);
          pinned = x[j2] == 0.0 && (lo[j2] == 0.0 || hi[j2] == 0.0);
        }
        Vec xl = project(resolve_amplitudes(anchor, pinned), lo, hi);
        Vec gl;
        const double fl = value_and_grad(xl, gl);
        if (fl <= f) {
          x = std::move(xl);
          g = std::move(gl);
          f = fl;
          mem.clear();
        }
      } catch (const std::exception&) {
        // Keep the quasi-Newton iterate when the linear solve is unusable.
      }
    }
    record(x, f);
    pg = projected_gradient(x, g, lo, hi);
  }

  if (!std::isfinite(f)) {
    res.converged = false;
    res.status = "non-finite objective at iteration " + std::to_string(it);
  }
  res.iterations = it;
  res.grad_norm = inf_norm(pg);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= D[i];
  unpack(x, work);
  ModelParams out = sc.to_external(work);
  sort_and_separate(out, config.min_gap);
  res.params = out;
  res.objective = objective(sample, res.params);
  return res;
}

FitResult recover(const TraceSample& sample, const FitConfig& config) {
  config.validate();
  FitResult best;
  if (config.multi_start > 1 && !config.freeze_beta) {
    const auto bounds = config.bounds();
    const int k = config.multi_start;
    auto node = [&](std::size_t i, int j) {
      return bounds[i].first + (j + 0.5) * (bounds[i].second - bounds[i].first) / k;
    };
    std::vector<std::vector<double>> starts;
    if (config.n_terms == 1) {
      for (int j = 0; j < k; ++j) starts.push_back({node(0, j)});
    } else {
      for (int j = 0; j < k; ++j)
        for (int l = 0; l < k; ++l)
          if (node(0, j) + config.min_gap < node(1, l)) starts.push_back({node(0, j), node(1, l)});
    }
    bool have = false;
    for (const auto& b : starts) {
      FitConfig c = config;
      c.beta_init = b;
      c.c_init.reset();
      FitResult r;
      try {
        r = minimize(sample, c);
      } catch (const RankDeficiencyError&) {
        continue;
      }
      if (!have || r.objective < best.objective) {
        best = std::move(r);
        have = true;
      }
    }
    if (!have) throw RankDeficiencyError("recover: no usable start in the lattice");
  } else {
    best = minimize(sample, config);
  }

  try {
    best.physical = to_physical(best.params, config.source_exponent);
    if (!best.physical.admissible) {
      if (!best.status.empty()) best.status += "; ";
      best.status += "recovered parameters are outside the admissible set";
    }
  } catch (const IdentifiabilityError& e) {
    best.converged = false;
    if (!best.status.empty()) best.status += "; ";
    best.status += e.what();
    best.physical = PhysicalParams{};
  }
  return best;
}

std::string to_json(const FitResult& r, int indent) {
  using json = nlohmann::ordered_json;
  auto number = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  const bool mapped = !r.physical.orders.alphas.empty();
  json j;
  j["kind"] = to_string(r.params.kind);
  j["case"] = to_string(r.params.problem_case);
  j["T0"] = number(r.T0);
  j["beta"] = r.params.beta;
  j["c"] = r.params.c;
  j["alpha"] = mapped ? json(r.physical.orders.alphas) : json::array();
  j["r"] = mapped ? json(r.physical.orders.weights) : json::array();
  j["amplitude"] = mapped ? number(r.physical.amplitude) : json(nullptr);
  j["constant"] = mapped && r.params.problem_case == ProblemCase::InitialData
                      ? number(r.physical.constant)
                      : json(nullptr);
  j["objective"] = number(r.objective);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["assumptions"] = r.assumptions;
  if (!r.status.empty()) j["status"] = r.status;
  return j.dump(indent);
}

}  // namespace fracorder
