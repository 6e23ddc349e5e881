#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <doctest.h>

#include "fracorder/errors.hpp"
#include "fracorder/forward.hpp"
#include "fracorder/models.hpp"

using namespace fracorder;
using std::numbers::pi;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

const double lam41 = pi * pi + 1.0;

// Laplace-inversion references (mpmath Talbot, 40 digits).
constexpr double kSquareI_1e3 = 1.427148845601419028;
constexpr double kSquareI_005 = 0.3265192879285823335;
constexpr double kSquareII_1e3 = 0.015669992346806756262;
constexpr double kSquareII_005 = 0.06214532756476115655;
constexpr double kSingleII_01 = 0.2465125605973795871;

}  // namespace

TEST_SUITE("problem builders") {
  TEST_CASE("single-mode problem") {
    const SpectralProblem p = build_example_4_1();
    REQUIRE(p.modes.size() == 1);
    CHECK(p.modes[0].lambda == doctest::Approx(10.8696044011));
    CHECK(p.modes[0].weight == 1.0);
    CHECK(p.problem_case == ProblemCase::InitialData);
    REQUIRE(p.ref_Au0_x0.has_value());
    CHECK(*p.ref_Au0_x0 == doctest::Approx(lam41));
  }

  TEST_CASE("two-order spec has unit leading weight") {
    const double al[] = {0.6, 0.9};
    const OrderSpec s = example_4_1_orders(ExampleCase::II, al, 0.5);
    CHECK(s.alphas == std::vector<double>{0.6, 0.9});
    CHECK(s.weights == std::vector<double>{0.5, 1.0});
  }

  TEST_CASE("unit square with initial data") {
    const SpectralProblem p = build_example_4_2(ExampleCase::I);
    CHECK(p.modes.size() == 4);
    CHECK(p.weight_sum() == doctest::Approx(1.625));
    CHECK(p.weighted_lambda_sum() == doctest::Approx(5.5 * pi * pi));
    REQUIRE(p.ref_Au0_x0.has_value());
    CHECK(*p.ref_Au0_x0 == doctest::Approx(54.28).epsilon(1e-3));
  }

  TEST_CASE("unit square with a source") {
    const SpectralProblem p = build_example_4_2(ExampleCase::II);
    CHECK(p.modes.size() == 5);
    CHECK(p.problem_case == ProblemCase::Source);
    CHECK(p.source_exponent == 0.0);
    CHECK(p.source_scale == 1.0);
    REQUIRE(p.ref_f_x0.has_value());
    CHECK(*p.ref_f_x0 == doctest::Approx(2.5));
    CHECK(p.weight_sum() == doctest::Approx(2.5));
  }
}

TEST_SUITE("traces") {
  TEST_CASE("single mode, single order is the Mittag-Leffler relaxation") {
    const SpectralProblem p = build_example_4_1();
    for (double t : {1e-6, 1e-3, 0.1, 1.0}) {
      INFO("t = " << t);
      CHECK(rel_err(trace_initial(p, OrderSpec::single(0.7), t),
                    ml2(0.7, 1.0, -lam41 * std::pow(t, 0.7))) < 1e-12);
    }
    CHECK(std::abs(trace(p, OrderSpec::single(0.7), 1e-14) - 1.0) < 1e-7);
  }

  TEST_CASE("single mode, two orders reference") {
    const double al[] = {0.3, 0.7};
    const OrderSpec s = example_4_1_orders(ExampleCase::II, al, 0.5);
    CHECK(rel_err(trace_initial(build_example_4_1(), s, 0.1), kSingleII_01) < 1e-10);
  }

  TEST_CASE("unit square with initial data: references and small-time limit") {
    const SpectralProblem p = build_example_4_2(ExampleCase::I);
    const OrderSpec s{{0.5, 0.8}, {0.5, 1.0}};
    CHECK(rel_err(trace_initial(p, s, 1e-3), kSquareI_1e3) < 1e-10);
    CHECK(rel_err(trace_initial(p, s, 0.05), kSquareI_005) < 1e-10);
    CHECK(std::abs(trace_initial(p, s, 1e-16) - 1.625) < 1e-4);
  }

  TEST_CASE("unit square with a source: references") {
    const SpectralProblem p = build_example_4_2(ExampleCase::II);
    const OrderSpec s{{0.5, 0.7}, {0.5, 1.0}};
    CHECK(rel_err(trace_source(p, s, 1e-3), kSquareII_1e3) < 1e-10);
    CHECK(rel_err(trace_source(p, s, 0.05), kSquareII_005) < 1e-10);
    CHECK(std::abs(trace_source(p, s, 1e-14)) < 1e-8);
  }

  TEST_CASE("source trace leading term") {
    const SpectralProblem p = build_example_4_2(ExampleCase::II);
    const OrderSpec s{{0.5, 0.7}, {0.5, 1.0}};
    const double t = 1e-12;
    // Relative size of the next term is r1 t^{0.2} Gamma(1.7) / Gamma(1.9), about 0.2%.
    const double lead = std::pow(t, 0.7) / std::tgamma(1.7);
    CHECK(trace_source(p, s, t) / lead == doctest::Approx(2.5).epsilon(0.01));
  }

  TEST_CASE("source trace with one mode and one order") {
    SpectralProblem p;
    p.modes = {{3.0, 0.8}};
    p.problem_case = ProblemCase::Source;
    p.source_scale = 1.7;
    const double t = 0.2;
    CHECK(rel_err(trace_source(p, OrderSpec::single(0.5), t),
                  1.7 * 0.8 * std::sqrt(t) * ml2(0.5, 1.5, -3.0 * std::sqrt(t))) < 1e-12);
  }

  TEST_CASE("two-term expansion accuracy for initial data") {
    const SpectralProblem p = build_example_4_2(ExampleCase::I);
    const OrderSpec s{{0.5, 0.8}, {1.0, 1.0}};
    const double t = 1e-4;
    const double R = trace_initial(p, s, t) - two_term_expansion(p, s, t);
    // Next-order coefficients are of size sum lambda^2 w / Gamma(2.6) ~ 1.7e3 and
    // sum lambda^2 w r1^2 / Gamma(1.9) of the same order.
    CHECK(std::abs(R) <= 5e3 * std::pow(t, 1.6));
    PhysicalParams ph;
    ph.orders = s;
    ph.amplitude = p.weighted_lambda_sum();
    ph.constant = p.weight_sum();
    const ModelParams fp = from_physical(ph, ModelKind::Polynomial, ProblemCase::InitialData);
    CHECK(rel_err(eval(fp, t), two_term_expansion(p, s, t)) < 1e-13);
  }

  TEST_CASE("kernel methods agree") {
    const SpectralProblem p = build_example_4_2(ExampleCase::I);
    const OrderSpec s{{0.5, 0.8}, {0.5, 1.0}};
    CHECK(rel_err(trace(p, s, 0.05, KernelMethod::Series), trace(p, s, 0.05, KernelMethod::Contour)) <
          1e-8);
  }

  TEST_CASE("automatic method covers large arguments") {
    const SpectralProblem p = build_example_4_1();
    const OrderSpec s = OrderSpec::single(0.7);
    CHECK_THROWS(trace(p, s, 50.0, KernelMethod::Series));
    const double v = trace(p, s, 50.0);
    CHECK(rel_err(v, trace(p, s, 50.0, KernelMethod::Contour)) < 1e-12);
    CHECK(v > 0.0);
  }

  TEST_CASE("wrong problem case is rejected") {
    CHECK_THROWS(trace_source(build_example_4_1(), OrderSpec::single(0.5), 0.1));
    CHECK_THROWS(trace_initial(build_example_4_2(ExampleCase::II), OrderSpec::single(0.5), 0.1));
  }
}

TEST_SUITE("laplace") {
  TEST_CASE("domain") {
    CHECK_THROWS_AS(laplace_trace(build_example_4_1(), OrderSpec::single(0.5), 0.0), DomainError);
    CHECK_THROWS_AS(laplace_trace(build_example_4_1(), OrderSpec::single(0.5), -1.0), DomainError);
  }

  TEST_CASE("source closed form") {
    SpectralProblem p;
    p.modes = {{4.0, 0.6}};
    p.problem_case = ProblemCase::Source;
    p.source_scale = 2.0;
    const OrderSpec s = OrderSpec::single(0.4, 1.5);
    for (double q : {0.5, 3.0, 40.0})
      CHECK(rel_err(laplace_trace(p, s, q), 2.0 * 0.6 / (q * (4.0 + 1.5 * std::pow(q, 0.4)))) <
            1e-14);
  }

  TEST_CASE("initial value from large p") {
    const SpectralProblem p = build_example_4_2(ExampleCase::I);
    const OrderSpec s{{0.5, 0.8}, {0.5, 1.0}};
    CHECK(rel_err(1e6 * laplace_trace(p, s, 1e6), 1.625) < 1e-2);
  }

  TEST_CASE("numerical transform of the trace") {
    const SpectralProblem p = build_example_4_1();
    const OrderSpec s = OrderSpec::single(0.7);
    boost::math::quadrature::exp_sinh<double> integrator;
    for (double q : {5.0, 20.0}) {
      const double num = integrator.integrate(
          [&](double t) { return t > 50.0 ? 0.0 : std::exp(-q * t) * trace(p, s, t); });
      CHECK(rel_err(num, laplace_trace(p, s, q)) < 1e-4);
    }
  }

  TEST_CASE("source asymptotics recover f at the observation point") {
    const SpectralProblem p = build_example_4_2(ExampleCase::II);
    const OrderSpec s{{0.5, 0.7}, {0.5, 1.0}};
    const double q = 1e8;
    const double step2 = (0.5 * std::pow(q, 0.5) + std::pow(q, 0.7)) * q * laplace_trace(p, s, q);
    CHECK(step2 == doctest::Approx(2.5).epsilon(0.01));
  }
}

TEST_SUITE("sampling") {
  TEST_CASE("uniform open grid") {
    const SpectralProblem p = build_example_4_1();
    const TraceSample smp = sample_trace(p, OrderSpec::single(0.7), 1e-6, 100);
    REQUIRE(smp.size() == 100);
    CHECK(smp.T0 == 1e-6);
    CHECK(smp.times.front() == doctest::Approx(1e-8));
    CHECK(smp.times.back() == doctest::Approx(1e-6));
    CHECK(std::abs(smp.values[0] - trace(p, OrderSpec::single(0.7), 1e-8)) < 1e-6);
  }

  TEST_CASE("single-order relaxation decreases monotonically") {
    const TraceSample smp = sample_trace(build_example_4_1(), OrderSpec::single(0.7), 1e-2, 100);
    for (std::size_t k = 1; k < smp.size(); ++k) CHECK(smp.values[k] < smp.values[k - 1]);
  }

  TEST_CASE("too few samples") {
    CHECK_THROWS(sample_trace(build_example_4_1(), OrderSpec::single(0.7), 1e-2, 1));
    CHECK_THROWS(sample_trace(build_example_4_1(), OrderSpec::single(0.7), -1.0, 10));
  }

  TEST_CASE("csv round trip is exact") {
    const TraceSample smp = sample_trace(build_example_4_1(), OrderSpec::single(0.7), 1e-3, 20);
    std::stringstream ss;
    write_trace_csv(ss, smp);
    CHECK(ss.str().rfind("t,g\n", 0) == 0);
    const TraceSample back = read_trace_csv(ss);
    CHECK(back.times == smp.times);
    CHECK(back.values == smp.values);
    CHECK(back.T0 == smp.T0);
  }

  TEST_CASE("csv reader rejects malformed input") {
    std::stringstream bad_header("x,y\n1,2\n");
    CHECK_THROWS(read_trace_csv(bad_header));
    std::stringstream bad_row("t,g\n1,abc\n");
    CHECK_THROWS(read_trace_csv(bad_row));
  }
}
