// Python bindings for the core operations: samplers, gradient estimators,
// optimizers, built-in problems and the bound/coefficient calculators.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "zokit/estimators.hpp"
#include "zokit/objective.hpp"
#include "zokit/optimizers.hpp"
#include "zokit/problems.hpp"
#include "zokit/rng.hpp"
#include "zokit/sampling.hpp"
#include "zokit/theory.hpp"

namespace py = pybind11;
using namespace zokit;

namespace {

std::vector<double> trace_losses(const RunTrace& t) {
  std::vector<double> out;
  out.reserve(t.records.size());
  for (const TraceRecord& r : t.records) out.push_back(r.loss);
  return out;
}

std::vector<long long> trace_queries(const RunTrace& t) {
  std::vector<long long> out;
  out.reserve(t.records.size());
  for (const TraceRecord& r : t.records) out.push_back(r.queries);
  return out;
}

}  // namespace

PYBIND11_MODULE(zokit, m) {
  m.doc() = "Zeroth-order stochastic optimization: two-point gradient estimators, "
            "variance-reduced runners, and convergence-bound calculators.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<EvalError>(m, "EvalError", PyExc_ArithmeticError);
  py::register_exception<GradientAccessError>(m, "GradientAccessError", PyExc_RuntimeError);
  py::register_exception<AnalysisError>(m, "AnalysisError", PyExc_ValueError);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next_u64", &Rng::next_u64)
      .def("uniform", &Rng::uniform)
      .def("normal", &Rng::normal)
      .def("below", &Rng::below, py::arg("n"))
      .def("substream", &Rng::substream, py::arg("role"), py::arg("a") = 0, py::arg("b") = 0);

  py::enum_<SamplingMode>(m, "SamplingMode")
      .value("WithReplacement", SamplingMode::WithReplacement)
      .value("WithoutReplacement", SamplingMode::WithoutReplacement);

  py::class_<MiniBatch>(m, "MiniBatch")
      .def(py::init([](std::vector<int> indices, SamplingMode mode) {
             return MiniBatch{std::move(indices), mode};
           }),
           py::arg("indices"), py::arg("mode") = SamplingMode::WithReplacement)
      .def_readonly("indices", &MiniBatch::indices)
      .def_readonly("mode", &MiniBatch::mode);

  m.def("sample_unit_sphere", &sample_unit_sphere, py::arg("rng"), py::arg("d"));
  m.def("draw_minibatch", &draw_minibatch, py::arg("rng"), py::arg("n"), py::arg("b"),
        py::arg("mode"));
  m.def("delta_n", &delta_n, py::arg("mode"), py::arg("b"), py::arg("n"));

  py::class_<Objective>(m, "Objective")
      .def(py::init<int, int, Objective::ComponentFn>(), py::arg("n"), py::arg("d"),
           py::arg("component"),
           "Finite-sum black box; component(i, x) must return a float.")
      .def("with_gradient", &Objective::with_gradient, py::return_value_policy::reference)
      .def("with_smoothness", &Objective::with_smoothness, py::return_value_policy::reference)
      .def("with_variance_bound", &Objective::with_variance_bound,
           py::return_value_policy::reference)
      .def_property_readonly("n", &Objective::num_components)
      .def_property_readonly("d", &Objective::dim)
      .def("eval_component", &Objective::eval_component, py::arg("i"), py::arg("x"))
      .def("metric_loss", &Objective::metric_loss, py::arg("x"))
      .def("metric_grad_norm_sq",
           [](const Objective& o, const Vec& x) -> py::object {
             const auto g = o.metric_grad_norm_sq(x);
             return g ? py::cast(*g) : py::none();
           })
      .def_property_readonly("queries", &Objective::queries)
      .def("reset_queries", &Objective::reset_queries)
      .def_property_readonly("smoothness",
                             [](const Objective& o) -> py::object {
                               return o.smoothness() ? py::cast(*o.smoothness()) : py::none();
                             })
      .def_property_readonly("variance_bound", [](const Objective& o) -> py::object {
        return o.variance_bound() ? py::cast(*o.variance_bound()) : py::none();
      });

  py::enum_<EstimatorKind>(m, "EstimatorKind")
      .value("Rand", EstimatorKind::Rand)
      .value("AvgRand", EstimatorKind::AvgRand)
      .value("Coord", EstimatorKind::Coord);

  py::class_<EstimatorSpec>(m, "EstimatorSpec")
      .def_static("rand", &EstimatorSpec::rand_est, py::arg("mu"))
      .def_static("avg_rand", &EstimatorSpec::avg_rand_est, py::arg("mu"), py::arg("q"))
      .def_static("coord", py::overload_cast<double, int>(&EstimatorSpec::coord_est),
                  py::arg("mu"), py::arg("d"))
      .def_static("coord_per_axis", py::overload_cast<Vec>(&EstimatorSpec::coord_est),
                  py::arg("mu_per_coord"))
      .def_readonly("kind", &EstimatorSpec::kind)
      .def_readonly("mu", &EstimatorSpec::mu)
      .def_readonly("q", &EstimatorSpec::q)
      .def("queries_per_component", &EstimatorSpec::queries_per_component, py::arg("d"));

  py::class_<GradientEstimate>(m, "GradientEstimate")
      .def_readonly("grad", &GradientEstimate::grad)
      .def_readonly("queries", &GradientEstimate::queries);

  m.def("estimate_component", &estimate_component, py::arg("spec"), py::arg("objective"),
        py::arg("i"), py::arg("x"), py::arg("rng"));
  m.def("estimate_batch", &estimate_batch, py::arg("spec"), py::arg("objective"),
        py::arg("batch"), py::arg("x"), py::arg("rng"));
  m.def("smoothed_value_mc", &smoothed_value_mc, py::arg("objective"), py::arg("i"), py::arg("x"),
        py::arg("mu"), py::arg("samples"), py::arg("rng"));
  m.def("estimator_error_bound", &estimator_error_bound, py::arg("spec"), py::arg("L"),
        py::arg("d"), py::arg("grad_norm_sq"));

  py::enum_<OutputRule>(m, "OutputRule")
      .value("UniformRandomIterate", OutputRule::UniformRandomIterate)
      .value("LastIterate", OutputRule::LastIterate);

  py::enum_<Algorithm>(m, "Algorithm")
      .value("ZoSgd", Algorithm::ZoSgd)
      .value("ZoSvrg", Algorithm::ZoSvrg)
      .value("Svrg", Algorithm::Svrg)
      .value("Sgd", Algorithm::Sgd);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("T", &RunConfig::T)
      .def_readwrite("m", &RunConfig::m)
      .def_readwrite("eta", &RunConfig::eta)
      .def_readwrite("b", &RunConfig::b)
      .def_readwrite("mode", &RunConfig::mode)
      .def_readwrite("estimator", &RunConfig::estimator)
      .def_readwrite("x0", &RunConfig::x0)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("output_rule", &RunConfig::output_rule)
      .def_readwrite("log_grad_norm", &RunConfig::log_grad_norm)
      .def_readwrite("divergence_guard", &RunConfig::divergence_guard)
      .def_readwrite("shared_step_directions", &RunConfig::shared_step_directions);

  py::class_<RunTrace>(m, "RunTrace")
      .def_readonly("final_point", &RunTrace::final_point)
      .def_readonly("output_point", &RunTrace::output_point)
      .def_readonly("diverged", &RunTrace::diverged)
      .def_readonly("total_queries", &RunTrace::total_queries)
      .def_property_readonly("losses", &trace_losses)
      .def_property_readonly("queries", &trace_queries)
      .def_property_readonly("iterates", [](const RunTrace& t) { return t.iterates; })
      .def("__len__", [](const RunTrace& t) { return t.records.size(); });

  m.def("run_zo_svrg", &run_zo_svrg, py::arg("config"), py::arg("objective"));
  m.def("run_zo_sgd", &run_zo_sgd, py::arg("config"), py::arg("objective"));
  m.def("run_svrg", &run_svrg, py::arg("config"), py::arg("objective"));
  m.def("run_sgd", &run_sgd, py::arg("config"), py::arg("objective"));
  m.def("run_algorithm", &run_algorithm, py::arg("algorithm"), py::arg("config"),
        py::arg("objective"));
  m.def("select_output", &select_output, py::arg("trace"), py::arg("rule"), py::arg("rng"));
  m.def("closed_form_queries", &closed_form_queries, py::arg("algorithm"), py::arg("estimator"),
        py::arg("n"), py::arg("d"), py::arg("T"), py::arg("m"), py::arg("b"));

  py::class_<NllsProblem>(m, "NllsProblem")
      .def_static("synthetic", &NllsProblem::synthetic, py::arg("seed"), py::arg("n"),
                  py::arg("d"), py::arg("separation"))
      .def_static("synthetic_preset", &NllsProblem::synthetic_preset, py::arg("seed") = 42,
                  py::arg("separation") = 2.0)
      .def_static("load_csv", &NllsProblem::load_csv, py::arg("path"))
      .def("save_csv", &NllsProblem::save_csv, py::arg("path"))
      .def("objective", &NllsProblem::objective)
      .def_readonly("features", &NllsProblem::features)
      .def_readonly("labels", &NllsProblem::labels);

  py::class_<QuadraticSumProblem>(m, "QuadraticSumProblem")
      .def_static("shared_hessian", &QuadraticSumProblem::shared_hessian, py::arg("seed"),
                  py::arg("n"), py::arg("d"))
      .def_static("varied_hessians", &QuadraticSumProblem::varied_hessians, py::arg("seed"),
                  py::arg("n"), py::arg("d"))
      .def("objective", &QuadraticSumProblem::objective)
      .def("optimal_value", &QuadraticSumProblem::optimal_value)
      .def("component_grad", &QuadraticSumProblem::component_grad, py::arg("i"), py::arg("x"))
      .def_readonly("lipschitz", &QuadraticSumProblem::lipschitz)
      .def_readonly("sigma_sq", &QuadraticSumProblem::sigma_sq);

  py::class_<AttackProblem>(m, "AttackProblem")
      .def_static("toy", &AttackProblem::toy, py::arg("seed"), py::arg("n"), py::arg("d"),
                  py::arg("k"))
      .def("objective", &AttackProblem::objective)
      .def("eval_loss", &AttackProblem::eval_loss, py::arg("i"), py::arg("x"))
      .def("adversarial_example", &AttackProblem::adversarial_example, py::arg("i"), py::arg("x"))
      .def("attack_succeeds", &AttackProblem::attack_succeeds, py::arg("i"), py::arg("x"))
      .def("mean_distortion",
           [](const AttackProblem& p, const Vec& x, bool successful_only) -> py::object {
             const auto v = p.mean_distortion(x, successful_only);
             return v ? py::cast(*v) : py::none();
           },
           py::arg("x"), py::arg("successful_only") = false)
      .def_readonly("images", &AttackProblem::images)
      .def_readonly("labels", &AttackProblem::labels);

  auto th = m.def_submodule("theory", "coefficient recursions and bound calculators");

  py::enum_<theory::Variant>(th, "Variant")
      .value("Rand", theory::Variant::Rand)
      .value("AvgRand", theory::Variant::AvgRand)
      .value("Coord", theory::Variant::Coord);

  py::class_<theory::SmoothnessParams>(th, "SmoothnessParams")
      .def(py::init<double, double>(), py::arg("L"), py::arg("sigma_sq") = 0.0)
      .def_readwrite("L", &theory::SmoothnessParams::L)
      .def_readwrite("sigma_sq", &theory::SmoothnessParams::sigma_sq);

  py::class_<theory::TheoryParams>(th, "TheoryParams")
      .def(py::init<>())
      .def_readwrite("variant", &theory::TheoryParams::variant)
      .def_readwrite("d", &theory::TheoryParams::d)
      .def_readwrite("b", &theory::TheoryParams::b)
      .def_readwrite("n", &theory::TheoryParams::n)
      .def_readwrite("mode", &theory::TheoryParams::mode)
      .def_readwrite("mu", &theory::TheoryParams::mu)
      .def_readwrite("eta", &theory::TheoryParams::eta)
      .def_readwrite("beta", &theory::TheoryParams::beta)
      .def_readwrite("m", &theory::TheoryParams::m)
      .def_readwrite("T", &theory::TheoryParams::T)
      .def_readwrite("q", &theory::TheoryParams::q);

  py::class_<theory::CoefficientTrace>(th, "CoefficientTrace")
      .def_readonly("c", &theory::CoefficientTrace::c)
      .def_readonly("gamma", &theory::CoefficientTrace::gamma)
      .def_readonly("chi", &theory::CoefficientTrace::chi)
      .def_readonly("gamma_bar", &theory::CoefficientTrace::gamma_bar)
      .def_readonly("chi_sum", &theory::CoefficientTrace::chi_sum)
      .def_readonly("gamma_positive", &theory::CoefficientTrace::gamma_positive);

  py::class_<theory::RateSetting>(th, "RateSetting")
      .def_readonly("mu", &theory::RateSetting::mu)
      .def_readonly("eta", &theory::RateSetting::eta)
      .def_readonly("beta", &theory::RateSetting::beta)
      .def_readonly("m", &theory::RateSetting::m);

  py::class_<theory::RateDecomposition>(th, "RateDecomposition")
      .def_readonly("d_over_T", &theory::RateDecomposition::d_over_T)
      .def_readonly("residual", &theory::RateDecomposition::residual);

  py::class_<theory::ControlVariateReport>(th, "ControlVariateReport")
      .def_readonly("eta_star", &theory::ControlVariateReport::eta_star)
      .def_readonly("variance_ratio", &theory::ControlVariateReport::variance_ratio)
      .def_readonly("rho_corr", &theory::ControlVariateReport::rho_corr);

  th.def("coefficients", &theory::coefficients, py::arg("params"), py::arg("smooth"));
  th.def("simplified_rate_setting", &theory::simplified_rate_setting, py::arg("variant"), py::arg("d"),
         py::arg("L"), py::arg("rho"), py::arg("T"));
  th.def("convergence_bound", &theory::convergence_bound, py::arg("params"), py::arg("coeffs"),
         py::arg("f0_minus_fstar"), py::arg("smooth"));
  th.def("blend_second_moment_envelope", &theory::blend_second_moment_envelope, py::arg("d"), py::arg("b"), py::arg("L"),
         py::arg("sigma_sq"), py::arg("mu"), py::arg("delta"), py::arg("grad_norm_sq"),
         py::arg("dist_sq"));
  th.def("rate_decomposition", &theory::rate_decomposition, py::arg("params"));
  th.def("control_variate_analysis", &theory::control_variate_analysis, py::arg("g0"),
         py::arg("c"));
}
