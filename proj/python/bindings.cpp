#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fracorder/checks.hpp"
#include "fracorder/errors.hpp"
#include "fracorder/fit.hpp"
#include "fracorder/forward.hpp"
#include "fracorder/models.hpp"
#include "fracorder/specfun.hpp"

namespace py = pybind11;
using namespace fracorder;

PYBIND11_MODULE(_fracorder, m) {
  m.doc() = "Multi-term fractional relaxation traces and order recovery";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<AccuracyError>(m, "AccuracyError", PyExc_ArithmeticError);
  py::register_exception<IdentifiabilityError>(m, "IdentifiabilityError", PyExc_ValueError);
  py::register_exception<RankDeficiencyError>(m, "RankDeficiencyError", PyExc_ArithmeticError);

  py::enum_<ProblemCase>(m, "ProblemCase")
      .value("InitialData", ProblemCase::InitialData)
      .value("Source", ProblemCase::Source);
  py::enum_<ModelKind>(m, "ModelKind")
      .value("Polynomial", ModelKind::Polynomial)
      .value("Rational", ModelKind::Rational);
  py::enum_<KernelMethod>(m, "KernelMethod")
      .value("Auto", KernelMethod::Auto)
      .value("Series", KernelMethod::Series)
      .value("Contour", KernelMethod::Contour);
  py::enum_<ExampleCase>(m, "ExampleCase").value("I", ExampleCase::I).value("II", ExampleCase::II);

  py::class_<OrderSpec>(m, "OrderSpec")
      .def(py::init([](std::vector<double> alphas, std::vector<double> weights) {
             OrderSpec s{std::move(alphas), std::move(weights)};
             s.validate();
             return s;
           }),
           py::arg("alphas"), py::arg("weights"))
      .def_static("single", &OrderSpec::single, py::arg("alpha"), py::arg("weight") = 1.0)
      .def_readonly("alphas", &OrderSpec::alphas)
      .def_readonly("weights", &OrderSpec::weights)
      .def("__repr__", [](const OrderSpec& s) {
        return "OrderSpec(alphas=" + py::repr(py::cast(s.alphas)).cast<std::string>() +
               ", weights=" + py::repr(py::cast(s.weights)).cast<std::string>() + ")";
      });

  m.def("gamma", &fracorder::gamma, py::arg("x"));
  m.def("ml2", &ml2, py::arg("alpha"), py::arg("beta"), py::arg("z"),
        "Two-parameter Mittag-Leffler function E_{alpha,beta}(z).");
  m.def(
      "mml",
      [](double beta0, std::vector<double> betas, std::vector<double> zs) {
        return mml(MLArgs{beta0, std::move(betas), std::move(zs)});
      },
      py::arg("beta0"), py::arg("betas"), py::arg("zs"),
      "Multinomial Mittag-Leffler function E_{(betas), beta0}(zs).");
  m.def(
      "s1_kernel",
      [](double lambda, const OrderSpec& s, double t, bool contour) {
        return contour ? s1_kernel_contour(lambda, s, t) : s1_kernel_series(lambda, s, t);
      },
      py::arg("lambda_"), py::arg("spec"), py::arg("t"), py::arg("contour") = false);
  m.def(
      "s2_kernel",
      [](double lambda, const OrderSpec& s, double t, bool contour) {
        return contour ? s2_kernel_contour(lambda, s, t) : s2_kernel_series(lambda, s, t);
      },
      py::arg("lambda_"), py::arg("spec"), py::arg("t"), py::arg("contour") = false);

  py::class_<Mode>(m, "Mode")
      .def(py::init([](double lambda, double weight) { return Mode{lambda, weight}; }),
           py::arg("lambda_"), py::arg("weight"))
      .def_readonly("lambda_", &Mode::lambda)
      .def_readonly("weight", &Mode::weight);
  py::class_<SpectralProblem>(m, "SpectralProblem")
      .def(py::init([](std::vector<Mode> modes, ProblemCase pc, double a, double c0) {
             SpectralProblem p;
             p.modes = std::move(modes);
             p.problem_case = pc;
             p.source_exponent = a;
             p.source_scale = c0;
             p.validate();
             return p;
           }),
           py::arg("modes"), py::arg("problem_case") = ProblemCase::InitialData,
           py::arg("source_exponent") = 0.0, py::arg("source_scale") = 1.0)
      .def_readonly("modes", &SpectralProblem::modes)
      .def_readonly("problem_case", &SpectralProblem::problem_case)
      .def("weight_sum", &SpectralProblem::weight_sum);
  m.def("example_single_mode", &build_example_4_1);
  m.def("example_square", &build_example_4_2, py::arg("case"));

  py::class_<TraceSample>(m, "TraceSample")
      .def(py::init([](std::vector<double> t, std::vector<double> g) {
             if (t.size() != g.size() || t.empty())
               throw DomainError("TraceSample: times and values must be non-empty and equal length");
             TraceSample s;
             s.T0 = t.back();
             s.times = std::move(t);
             s.values = std::move(g);
             return s;
           }),
           py::arg("times"), py::arg("values"))
      .def_readonly("times", &TraceSample::times)
      .def_readonly("values", &TraceSample::values)
      .def_readonly("T0", &TraceSample::T0)
      .def("__len__", &TraceSample::size);

  m.def("trace", &trace, py::arg("problem"), py::arg("spec"), py::arg("t"),
        py::arg("method") = KernelMethod::Auto);
  m.def("laplace_trace", &laplace_trace, py::arg("problem"), py::arg("spec"), py::arg("p"));
  m.def("sample_trace", &sample_trace, py::arg("problem"), py::arg("spec"), py::arg("T0"),
        py::arg("n") = 100, py::arg("method") = KernelMethod::Auto);

  py::class_<ModelParams>(m, "ModelParams")
      .def_readonly("kind", &ModelParams::kind)
      .def_readonly("problem_case", &ModelParams::problem_case)
      .def_readonly("c", &ModelParams::c)
      .def_readonly("beta", &ModelParams::beta);
  m.def("eval_model", &fracorder::eval, py::arg("params"), py::arg("t"));

  py::class_<PhysicalParams>(m, "PhysicalParams")
      .def_readonly("orders", &PhysicalParams::orders)
      .def_readonly("amplitude", &PhysicalParams::amplitude)
      .def_readonly("constant", &PhysicalParams::constant)
      .def_readonly("admissible", &PhysicalParams::admissible);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("kind", &FitConfig::kind)
      .def_readwrite("problem_case", &FitConfig::problem_case)
      .def_readwrite("n_terms", &FitConfig::n_terms)
      .def_readwrite("beta_init", &FitConfig::beta_init)
      .def_readwrite("beta_bounds", &FitConfig::beta_bounds)
      .def_readwrite("max_iter", &FitConfig::max_iter)
      .def_readwrite("memory", &FitConfig::memory)
      .def_readwrite("grad_tol", &FitConfig::grad_tol)
      .def_readwrite("min_gap", &FitConfig::min_gap)
      .def_readwrite("multi_start", &FitConfig::multi_start)
      .def_readwrite("source_exponent", &FitConfig::source_exponent)
      .def_readwrite("c_init", &FitConfig::c_init)
      .def_readwrite("freeze_beta", &FitConfig::freeze_beta)
      .def_readwrite("nonnegative_weight", &FitConfig::nonnegative_weight);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("physical", &FitResult::physical)
      .def_readonly("T0", &FitResult::T0)
      .def_readonly("objective", &FitResult::objective)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("status", &FitResult::status)
      .def_readonly("assumptions", &FitResult::assumptions)
      .def("to_json", [](const FitResult& r) { return to_json(r); });

  m.def("minimize", &minimize, py::arg("sample"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("recover", &recover, py::arg("sample"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>(),
        "Fit the model and map the result to physical parameters.");

  py::class_<CheckResult>(m, "CheckResult")
      .def_readonly("name", &CheckResult::name)
      .def_readonly("passed", &CheckResult::passed)
      .def_readonly("measured", &CheckResult::measured)
      .def_readonly("tolerance", &CheckResult::tolerance)
      .def_readonly("detail", &CheckResult::detail);
  m.def("run_checks", []() { return run_checks(); }, py::call_guard<py::gil_scoped_release>());
}
