#include <math.h>  // lgamma_r

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fracorder/errors.hpp"
#include "fracorder/specfun.hpp"
#include "mp_real.hpp"

namespace fracorder {
namespace detail {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kLn2 = std::numbers::ln2;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Terms of
//   sum_k sum_{|p| = k} (k; p) prod_j z_j^{p_j} / Gamma(beta0 + sum_j betas_j p_j).
struct Series {
  double beta0;
  std::vector<double> betas;
  std::vector<double> zs;
};

bool is_pole(double x) { return x <= 0.0 && x == std::floor(x); }

// log|Gamma(x)| and its sign, without touching the global signgam.
double log_abs_gamma(double x, int* sign) {
  int s = 1;
  const double v = ::lgamma_r(x, &s);
  if (sign) *sign = s;
  return v;
}

class LogFactorials {
 public:
  double operator()(int n) {
    while (static_cast<int>(table_.size()) <= n)
      table_.push_back(log_abs_gamma(static_cast<double>(table_.size()) + 1.0, nullptr));
    return table_[n];
  }

 private:
  std::vector<double> table_;
};

// Advances p through all compositions of |p| into p.size() parts, starting
// from (0, ..., 0, k). Returns false after the last one, (k, 0, ..., 0).
bool next_composition(std::vector<int>& p) {
  const int m = static_cast<int>(p.size());
  int t = m - 1;
  while (t >= 0 && p[t] == 0) --t;
  if (t <= 0) return false;
  const int v = p[t];
  p[t] = 0;
  p[t - 1] += 1;
  p[m - 1] = v - 1;
  return true;
}

void first_composition(std::vector<int>& p, int k) {
  std::fill(p.begin(), p.end(), 0);
  p.back() = k;
}

struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

struct DoublePass {
  double sum = 0.0;
  double error = 0.0;
  double max_log = kNegInf;
  int peak_shell = 0;
  int shells = 0;
  long terms = 0;
  bool converged = false;
};

DoublePass sum_double(const Series& s, int max_shells, long max_terms,
                      double perturbation) {
  const int m = static_cast<int>(s.zs.size());
  std::vector<double> lz(m);
  std::vector<int> zsign(m);
  for (int j = 0; j < m; ++j) {
    lz[j] = std::log(std::abs(s.zs[j]));
    zsign[j] = s.zs[j] < 0 ? -1 : 1;
  }
  const double lpert = std::log1p(perturbation);
  LogFactorials lf;
  Neumaier acc;
  DoublePass out;
  std::vector<int> p(m);

  for (int k = 0; k < max_shells; ++k) {
    Neumaier shell;
    double shell_abs = 0.0;
    double shell_err = 0.0;
    first_composition(p, k);
    do {
      double arg = s.beta0;
      double lt = lf(k);
      double mag = lf(k);
      int sign = 1;
      for (int j = 0; j < m; ++j) {
        if (p[j] == 0) continue;
        arg += s.betas[j] * p[j];
        const double lzp = p[j] * lz[j];
        lt += lzp - lf(p[j]);
        mag += std::abs(lzp) + lf(p[j]);
        if (zsign[j] < 0 && (p[j] & 1)) sign = -sign;
      }
      ++out.terms;
      if (is_pole(arg)) continue;
      int gsign = 1;
      const double lg = log_abs_gamma(arg, &gsign) + lpert;
      lt -= lg;
      mag += std::abs(lg);
      if (lt > out.max_log) {
        out.max_log = lt;
        out.peak_shell = k;
      }
      const double term = sign * gsign * std::exp(lt);
      shell.add(term);
      shell_abs += std::abs(term);
      shell_err += std::abs(term) * (2.0 * mag + 4.0) * kEps;
    } while (next_composition(p));

    acc.add(shell.value());
    out.error += shell_err;
    out.shells = k + 1;
    if (k > 0 && shell_abs <= 1e-17 * std::abs(acc.value()) && k > out.peak_shell) {
      out.converged = true;
      break;
    }
    if (!std::isfinite(acc.value())) break;
    if (out.terms > max_terms) break;
  }
  out.sum = acc.value();
  out.error += std::abs(out.sum) * 2.0 * kEps;
  return out;
}

struct ExtendedPass {
  double sum = 0.0;
  int shells = 0;
  long terms = 0;
};

// Sums the series in precision `prec`. Every Gamma argument is formed in
// multiple precision from the exact binary values of beta0 and betas, since
// rounding them to double first is amplified by the same cancellation that
// makes the extended pass necessary. Terms whose estimated log-magnitude is
// below `floor_log` are skipped.
ExtendedPass sum_extended(const Series& s, mpfr_prec_t prec, double floor_log,
                          int peak_shell, int max_shells, long max_terms,
                          double perturbation) {
  const int m = static_cast<int>(s.zs.size());
  std::vector<double> lz(m);
  for (int j = 0; j < m; ++j) lz[j] = std::log(std::abs(s.zs[j]));
  LogFactorials lf;

  const MpReal beta0(s.beta0, prec);
  std::vector<MpReal> betas;
  std::vector<MpReal> zs;
  std::vector<std::vector<MpReal>> powers(m);  // z^n / n!
  for (int j = 0; j < m; ++j) {
    betas.emplace_back(s.betas[j], prec);
    zs.emplace_back(s.zs[j], prec);
    powers[j].emplace_back(1.0, prec);
  }
  std::vector<MpReal> fact;
  fact.emplace_back(1.0, prec);

  MpReal pert(1.0, prec);
  mpfr_add_d(pert.get(), pert.get(), perturbation, MPFR_RNDN);

  MpReal sum(prec), term(prec), arg(prec), g(prec), tmp(prec);
  ExtendedPass out;
  std::vector<int> p(m);

  for (int k = 0; k < max_shells; ++k) {
    if (k > 0) {
      fact.emplace_back(prec);
      mpfr_mul_ui(fact[k].get(), fact[k - 1].get(), static_cast<unsigned long>(k), MPFR_RNDN);
      for (int j = 0; j < m; ++j) {
        powers[j].emplace_back(prec);
        mpfr_mul(powers[j][k].get(), powers[j][k - 1].get(), zs[j].get(), MPFR_RNDN);
        mpfr_div_ui(powers[j][k].get(), powers[j][k].get(), static_cast<unsigned long>(k),
                    MPFR_RNDN);
      }
    }
    double shell_max = kNegInf;
    first_composition(p, k);
    do {
      double argd = s.beta0;
      double lt = lf(k);
      for (int j = 0; j < m; ++j) {
        if (p[j] == 0) continue;
        argd += s.betas[j] * p[j];
        lt += p[j] * lz[j] - lf(p[j]);
      }
      ++out.terms;
      if (argd <= 0.5 && std::abs(argd - std::round(argd)) < 1e-6) {
        // Close to a pole; decide in exact arithmetic below.
      } else {
        lt -= log_abs_gamma(argd, nullptr);
        shell_max = std::max(shell_max, lt);
        if (lt < floor_log) continue;
      }
      mpfr_set(arg.get(), beta0.get(), MPFR_RNDN);
      for (int j = 0; j < m; ++j) {
        if (p[j] == 0) continue;
        mpfr_mul_si(tmp.get(), betas[j].get(), p[j], MPFR_RNDN);
        mpfr_add(arg.get(), arg.get(), tmp.get(), MPFR_RNDN);
      }
      if (mpfr_sgn(arg.get()) <= 0 && mpfr_integer_p(arg.get())) continue;
      mpfr_gamma(g.get(), arg.get(), MPFR_RNDN);
      if (perturbation != 0.0) mpfr_mul(g.get(), g.get(), pert.get(), MPFR_RNDN);
      mpfr_set(term.get(), fact[k].get(), MPFR_RNDN);
      for (int j = 0; j < m; ++j)
        if (p[j] > 0) mpfr_mul(term.get(), term.get(), powers[j][p[j]].get(), MPFR_RNDN);
      mpfr_div(term.get(), term.get(), g.get(), MPFR_RNDN);
      mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
    } while (next_composition(p));

    out.shells = k + 1;
    if (k > peak_shell && shell_max < floor_log) {
      out.sum = sum.to_double();
      return out;
    }
    if (out.terms > max_terms)
      throw DomainError("Mittag-Leffler series: term budget exhausted after " +
                        std::to_string(k + 1) + " shells");
  }
  throw DomainError("Mittag-Leffler series: no convergence within " +
                    std::to_string(max_shells) + " shells");
}

bool double_is_accurate(const DoublePass& dp) {
  return dp.converged && std::isfinite(dp.sum) && dp.error <= 1e-13 * std::abs(dp.sum);
}

// Natural log of a conservative lower guess for |S| when the double pass
// result is unreliable.
double log_magnitude_guess(const DoublePass& dp) {
  if (dp.sum != 0.0 && std::isfinite(dp.sum) && dp.error < 0.5 * std::abs(dp.sum))
    return std::log(std::abs(dp.sum)) - 1.0;
  if (dp.sum != 0.0 && std::isfinite(dp.sum))
    return std::min(std::log(std::abs(dp.sum)), 0.0) - 10.0;
  return -10.0;
}

int precision_for(const DoublePass& dp, double log_s, long terms) {
  const double bits = (dp.max_log - log_s) / kLn2 + 53.0 + 40.0 +
                      std::log2(static_cast<double>(terms) + 1.0);
  return std::max(128, static_cast<int>(std::ceil(bits)));
}

MlEvaluation run_extended(const Series& s, const DoublePass& dp, int max_shells,
                          const SeriesOptions& opt) {
  double log_s = log_magnitude_guess(dp);
  for (int attempt = 0; attempt < 6; ++attempt) {
    const int prec = precision_for(dp, log_s, dp.terms);
    if (prec > opt.max_precision_bits)
      throw DomainError("Mittag-Leffler series: cancellation needs " + std::to_string(prec) +
                        " bits, above the limit of " +
                        std::to_string(opt.max_precision_bits));
    const double floor_log = std::max(dp.max_log - prec * kLn2, log_s - 45.0);
    const ExtendedPass ep = sum_extended(s, prec, floor_log, dp.peak_shell, max_shells,
                                         opt.max_terms, opt.gamma_perturbation);
    if (ep.sum != 0.0 && std::log(std::abs(ep.sum)) >= log_s) {
      return {ep.sum, MlRoute::ExtendedSeries, ep.shells, prec};
    }
    // The sum came out smaller than assumed: precision and pruning floor
    // were both too coarse. Retry with the observed magnitude.
    log_s = (ep.sum != 0.0 ? std::min(std::log(std::abs(ep.sum)), log_s) : log_s) - 25.0;
  }
  throw AccuracyError("Mittag-Leffler series: extended precision did not settle");
}

}  // namespace

double rgamma(double x) {
  if (std::isnan(x)) return x;
  if (is_pole(x)) return 0.0;
  if (x > 170.0) return std::exp(-log_abs_gamma(x, nullptr));
  return 1.0 / std::tgamma(x);
}

double ml2_integral(double alpha, double beta, double z) {
  using std::numbers::pi;
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("ml2_integral: alpha must lie in (0, 1)");
  if (!(z < 0.0) || !std::isfinite(z)) throw DomainError("ml2_integral: z must be negative");
  if (!std::isfinite(beta)) throw DomainError("ml2_integral: beta must be finite");

  // The representation needs beta < 1 + alpha; larger beta is reached by
  // E_{a,b+a}(z) = (E_{a,b}(z) - 1/Gamma(b)) / z.
  std::vector<double> steps;
  double b = beta;
  while (b >= 1.0 + alpha) {
    b -= alpha;
    steps.push_back(b);
  }

  const double x = -z;
  const double sb = std::sin(pi * b);
  const double sab = std::sin(pi * (alpha - b));
  const double ca = std::cos(pi * alpha);
  // Integrand without the factor r^{alpha - b}.
  auto h = [&](double r) {
    const double ra = std::pow(r, alpha);
    const double den = ra * ra + 2.0 * x * ra * ca + x * x;
    return std::exp(-r) * (ra * sb - x * sab) / den;
  };
  // On (0, 1) the substitution r = u^{1/(c+1)}, c = alpha - b > -1, absorbs
  // r^c, which can be close to the non-integrable r^{-1}.
  const double c1 = alpha - b + 1.0;
  boost::math::quadrature::tanh_sinh<double> head;
  boost::math::quadrature::exp_sinh<double> tail;
  double err_h = 0.0, l1_h = 0.0, err_t = 0.0, l1_t = 0.0;
  const double vh =
      head.integrate([&](double u) { return h(std::pow(u, 1.0 / c1)); }, 0.0, 1.0, 1e-13, &err_h,
                     &l1_h) /
      c1;
  err_h /= c1;
  l1_h /= c1;
  const double vt = tail.integrate(
      [&](double u) { return std::pow(1.0 + u, alpha - b) * h(1.0 + u); }, 1e-13, &err_t, &l1_t);
  double v = (vh + vt) / pi;
  const double err = err_h + err_t;
  const double l1 = l1_h + l1_t;
  if (!std::isfinite(v) || err > 1e-10 * std::max(l1, 1e-300))
    throw AccuracyError("ml2_integral: quadrature did not converge");
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) v = (v - rgamma(*it)) / z;
  return v;
}

MlEvaluation ml2_eval(double alpha, double beta, double z, const SeriesOptions& opt) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("ml2: alpha must lie in (0, 2)");
  if (!std::isfinite(beta)) throw DomainError("ml2: beta must be finite");
  if (!std::isfinite(z) || z > 0.0) throw DomainError("ml2: z must be non-positive");
  if (-z > kZMax)
    throw DomainError("ml2: |z| = " + std::to_string(-z) + " exceeds the series limit");
  if (z == 0.0) return {rgamma(beta) / (1.0 + opt.gamma_perturbation), MlRoute::Trivial, 1, 53};

  const Series s{beta, {alpha}, {z}};
  const DoublePass dp =
      sum_double(s, opt.max_shells_single, opt.max_terms, opt.gamma_perturbation);
  if (double_is_accurate(dp)) return {dp.sum, MlRoute::DoubleSeries, dp.shells, 53};

  const int prec = precision_for(dp, log_magnitude_guess(dp), dp.terms);
  const bool costly = !dp.converged || prec > 1024 || dp.peak_shell > 3000;
  if (alpha < 1.0 && costly && opt.gamma_perturbation == 0.0) {
    try {
      return {ml2_integral(alpha, beta, z), MlRoute::Integral, 0, 53};
    } catch (const AccuracyError&) {
      // Near-singular integrands (beta close to 1 + alpha); sum the series.
    }
  }
  return run_extended(s, dp, opt.max_shells_single, opt);
}

MlEvaluation mml_eval(const MLArgs& args, const SeriesOptions& opt) {
  args.validate();
  Series s{args.beta0, {}, {}};
  for (std::size_t j = 0; j < args.zs.size(); ++j) {
    if (args.zs[j] == 0.0) continue;
    s.betas.push_back(args.betas[j]);
    s.zs.push_back(args.zs[j]);
  }
  if (s.zs.empty())
    return {rgamma(args.beta0) / (1.0 + opt.gamma_perturbation), MlRoute::Trivial, 1, 53};
  if (s.zs.size() == 1) return ml2_eval(s.betas[0], s.beta0, s.zs[0], opt);

  const DoublePass dp =
      sum_double(s, opt.max_shells_multi, opt.max_terms, opt.gamma_perturbation);
  if (double_is_accurate(dp)) return {dp.sum, MlRoute::DoubleSeries, dp.shells, 53};
  if (!dp.converged)
    throw DomainError("mml: series did not converge within " + std::to_string(dp.shells) +
                      " shells (" + std::to_string(dp.terms) + " terms)");
  if (dp.terms > opt.max_extended_terms)
    throw DomainError("mml: cancellation repair would need " + std::to_string(dp.terms) +
                      " extended-precision terms");
  return run_extended(s, dp, opt.max_shells_multi, opt);
}

}  // namespace detail

double ml2(double alpha, double beta, double z) {
  return detail::ml2_eval(alpha, beta, z).value;
}

double mml(const MLArgs& args) { return detail::mml_eval(args).value; }

}  // namespace fracorder
