#include <cmath>
#include <numbers>

#include <doctest.h>

#include "fracorder/errors.hpp"
#include "fracorder/forward.hpp"
#include "fracorder/models.hpp"

using namespace fracorder;
using std::numbers::pi;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

ModelParams make(ModelKind k, ProblemCase pc, std::vector<double> c, std::vector<double> beta) {
  ModelParams p;
  p.kind = k;
  p.problem_case = pc;
  p.c = std::move(c);
  p.beta = std::move(beta);
  return p;
}

const double lam41 = pi * pi + 1.0;

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("polynomial with a constant") {
    const ModelParams p = make(ModelKind::Polynomial, ProblemCase::InitialData, {1.0, -2.0}, {0.7});
    CHECK(eval(p, 1.0) == doctest::Approx(-1.0));
    CHECK(eval(p, 0.25) == doctest::Approx(1.0 - 2.0 * std::pow(0.25, 0.7)));
  }

  TEST_CASE("polynomial source form has no constant") {
    const ModelParams p =
        make(ModelKind::Polynomial, ProblemCase::Source, {2.0, -0.5}, {0.4, 0.9});
    const double t = 0.3;
    CHECK(eval(p, t) == doctest::Approx(2.0 * std::pow(t, 0.4) - 0.5 * std::pow(t, 0.9)));
  }

  TEST_CASE("rational initial-data form is the single-order approximant") {
    const double a = 0.6, x = lam41 / std::tgamma(a + 1.0);
    const ModelParams p = make(ModelKind::Rational, ProblemCase::InitialData, {1.0, x}, {a});
    for (double t : {1e-4, 0.01, 0.5})
      CHECK(rel_err(eval(p, t), 1.0 / (1.0 + x * std::pow(t, a))) < 1e-15);
  }

  TEST_CASE("rational source form") {
    const ModelParams p = make(ModelKind::Rational, ProblemCase::Source, {2.5, 1.2, -0.3}, {0.7, 0.9});
    const double t = 0.2;
    const double P = 1.2 * std::pow(t, 0.7) - 0.3 * std::pow(t, 0.9);
    CHECK(rel_err(eval(p, t), 2.5 * (1.0 - 1.0 / (1.0 + P))) < 1e-14);
  }

  TEST_CASE("polynomial and rational agree to first order") {
    const double b = 0.7, x = 3.0;
    const ModelParams fp = make(ModelKind::Polynomial, ProblemCase::InitialData, {1.0, -x}, {b});
    const ModelParams fr = make(ModelKind::Rational, ProblemCase::InitialData, {1.0, x}, {b});
    const double d1 = std::abs(eval(fp, 1e-8) - eval(fr, 1e-8));
    const double d2 = std::abs(eval(fp, 1e-7) - eval(fr, 1e-7));
    // The gap behaves like x^2 t^{2b}, so one decade in t scales it by 10^{2b}.
    CHECK(d2 / d1 == doctest::Approx(std::pow(10.0, 2.0 * b)).epsilon(1e-3));
  }

  TEST_CASE("non-positive time is rejected") {
    const ModelParams p = make(ModelKind::Polynomial, ProblemCase::InitialData, {1.0, -2.0}, {0.7});
    CHECK_THROWS_AS(eval(p, 0.0), DomainError);
    CHECK_THROWS_AS(eval(p, -1.0), DomainError);
  }

  TEST_CASE("invalid parameters") {
    CHECK_THROWS(make(ModelKind::Polynomial, ProblemCase::InitialData, {1.0, 1.0, 1.0}, {0.9, 0.5})
                     .validate());
    CHECK_THROWS(make(ModelKind::Polynomial, ProblemCase::InitialData, {1.0, 1.0}, {2.0}).validate());
    CHECK_THROWS(make(ModelKind::Polynomial, ProblemCase::Source, {1.0, 1.0}, {0.5}).validate());
    CHECK_THROWS(make(ModelKind::Polynomial, ProblemCase::InitialData, {1.0}, {}).validate());
  }

  TEST_CASE("amplitude counts") {
    CHECK(amplitude_count(ModelKind::Polynomial, ProblemCase::InitialData, 2) == 3);
    CHECK(amplitude_count(ModelKind::Polynomial, ProblemCase::Source, 2) == 2);
    CHECK(amplitude_count(ModelKind::Rational, ProblemCase::InitialData, 1) == 2);
    CHECK(amplitude_count(ModelKind::Rational, ProblemCase::Source, 1) == 2);
  }

  TEST_CASE("kind names") {
    CHECK(model_kind_from_string("fp") == ModelKind::Polynomial);
    CHECK(model_kind_from_string("fr") == ModelKind::Rational);
    CHECK(std::string(to_string(ModelKind::Polynomial)) == "fp");
    CHECK_THROWS(model_kind_from_string("spline"));
  }
}

TEST_SUITE("grad") {
  TEST_CASE("polynomial amplitude partials are powers of t") {
    const ModelParams p =
        make(ModelKind::Polynomial, ProblemCase::InitialData, {1.0, -2.0, 0.5}, {0.4, 0.9});
    const double t = 0.3;
    const auto g = grad(p, t);
    REQUIRE(g.size() == 5);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(std::pow(t, 0.4)));
    CHECK(g[2] == doctest::Approx(std::pow(t, 0.9)));
    CHECK(g[3] == doctest::Approx(-2.0 * std::pow(t, 0.4) * std::log(t)));
  }

  TEST_CASE("exponent partials vanish at t = 1 for polynomials") {
    const ModelParams p =
        make(ModelKind::Polynomial, ProblemCase::Source, {1.0, -2.0}, {0.4, 0.9});
    const auto g = grad(p, 1.0);
    CHECK(g[2] == 0.0);
    CHECK(g[3] == 0.0);
  }

  TEST_CASE("rational partials against central differences") {
    for (ProblemCase pc : {ProblemCase::InitialData, ProblemCase::Source}) {
      const ModelParams p = make(ModelKind::Rational, pc, {1.3, 4.0, -1.1}, {0.45, 0.85});
      const double t = 0.02;
      const auto g = grad(p, t);
      for (std::size_t j = 0; j < p.n_params(); ++j) {
        ModelParams hi = p, lo = p;
        double& xh = j < p.c.size() ? hi.c[j] : hi.beta[j - p.c.size()];
        double& xl = j < p.c.size() ? lo.c[j] : lo.beta[j - p.c.size()];
        const double h = 1e-7 * std::max(1.0, std::abs(xh));
        xh += h;
        xl -= h;
        const double fd = (eval(hi, t) - eval(lo, t)) / (2.0 * h);
        INFO("case " << to_string(pc) << ", parameter " << j);
        CHECK(std::abs(g[j] - fd) <= 1e-6 * std::max(std::abs(fd), 1e-3));
      }
    }
  }
}

TEST_SUITE("physical mapping") {
  TEST_CASE("single order from physical parameters") {
    PhysicalParams ph;
    ph.orders = OrderSpec::single(0.7);
    ph.amplitude = 10.87;
    ph.constant = 1.0;
    const ModelParams p = from_physical(ph, ModelKind::Polynomial, ProblemCase::InitialData);
    REQUIRE(p.c.size() == 2);
    CHECK(p.c[0] == 1.0);
    CHECK(rel_err(p.c[1], -10.87 / std::tgamma(1.7)) < 1e-14);
    CHECK(p.beta == std::vector<double>{0.7});
  }

  TEST_CASE("source exponent shifts the exponents") {
    PhysicalParams ph;
    ph.orders = OrderSpec{{0.5, 0.7}, {0.5, 1.0}};
    ph.amplitude = 2.5;
    const ModelParams p = from_physical(ph, ModelKind::Polynomial, ProblemCase::Source, 0.5);
    REQUIRE(p.beta.size() == 2);
    CHECK(p.beta[0] == doctest::Approx(1.2));
    CHECK(p.beta[1] == doctest::Approx(1.4));
  }

  TEST_CASE("exact round trip for two orders") {
    PhysicalParams ph;
    ph.orders = OrderSpec{{0.6, 0.9}, {0.5, 1.0}};
    ph.amplitude = lam41;
    ph.constant = 1.0;
    for (ModelKind k : {ModelKind::Polynomial, ModelKind::Rational}) {
      const PhysicalParams back = to_physical(from_physical(ph, k, ProblemCase::InitialData));
      CHECK(back.admissible);
      CHECK(rel_err(back.orders.alphas[0], 0.6) < 1e-12);
      CHECK(rel_err(back.orders.alphas[1], 0.9) < 1e-12);
      CHECK(rel_err(back.orders.weights[0], 0.5) < 1e-12);
      CHECK(back.orders.weights[1] == 1.0);
      CHECK(rel_err(back.amplitude, lam41) < 1e-12);
      CHECK(rel_err(back.constant, 1.0) < 1e-12);
    }
  }

  TEST_CASE("fitted single order reads off lambda") {
    // A fit with exponent 0.6998 and lambda 10.83 in the polynomial form.
    const double beta = 0.6998, lam = 10.83;
    const ModelParams p = make(ModelKind::Polynomial, ProblemCase::InitialData,
                               {1.0, -lam / std::tgamma(beta + 1.0)}, {beta});
    const PhysicalParams ph = to_physical(p);
    CHECK(ph.orders.alphas[0] == doctest::Approx(beta));
    CHECK(ph.amplitude == doctest::Approx(lam));
  }

  TEST_CASE("source amplitude estimates f at the observation point") {
    const SpectralProblem prob = build_example_4_2(ExampleCase::II);
    const ModelParams p = make(ModelKind::Polynomial, ProblemCase::Source,
                               {prob.weight_sum() / std::tgamma(1.7)}, {0.7});
    CHECK(to_physical(p).amplitude == doctest::Approx(2.5));
  }

  TEST_CASE("non-positive lower order is not identifiable") {
    const ModelParams p = make(ModelKind::Polynomial, ProblemCase::InitialData, {1.0, -5.0, 1.0},
                               {0.5, 1.2});
    CHECK_THROWS_AS(to_physical(p), IdentifiabilityError);
  }

  TEST_CASE("leading coefficients") {
    const ModelParams fp =
        make(ModelKind::Polynomial, ProblemCase::InitialData, {1.0, -2.0, 0.5}, {0.4, 0.9});
    CHECK(leading_coefficients(fp) == std::vector<double>{-2.0, 0.5});
    const ModelParams fr =
        make(ModelKind::Rational, ProblemCase::InitialData, {2.0, 3.0, -1.0}, {0.4, 0.9});
    CHECK(leading_coefficients(fr) == std::vector<double>{-6.0, 2.0});
    const ModelParams fs = make(ModelKind::Rational, ProblemCase::Source, {2.0, 3.0}, {0.4});
    CHECK(leading_coefficients(fs) == std::vector<double>{6.0});
  }
}
