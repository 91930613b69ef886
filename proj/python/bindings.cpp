#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mdmargin/data.hpp"
#include "mdmargin/diagnostics.hpp"
#include "mdmargin/errors.hpp"
#include "mdmargin/margin.hpp"
#include "mdmargin/optimize.hpp"
#include "mdmargin/potential.hpp"

namespace py = pybind11;
using namespace mdmargin;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mirror descent with homogeneous potentials: linear classification "
            "trajectories, generalized max-margin solvers and convergence "
            "diagnostics";

  py::register_exception<singular_origin_error>(m, "SingularOriginError", PyExc_ValueError);
  py::register_exception<infeasible_error>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<monotonicity_error>(m, "MonotonicityError", PyExc_RuntimeError);

  py::class_<Potential>(m, "Potential")
      .def(py::init<double, double>(), py::arg("p"), py::arg("beta"))
      .def_static("separable", &Potential::separable, py::arg("p"))
      .def_readonly("p", &Potential::p)
      .def_readonly("beta", &Potential::beta)
      .def_property_readonly("conjugate", &Potential::conjugate)
      .def("__repr__", [](const Potential& pot) {
        return "Potential(p=" + std::to_string(pot.p) + ", beta=" + std::to_string(pot.beta) + ")";
      });

  m.def("psi_value", &psi_value, py::arg("w"), py::arg("pot"));
  m.def("psi_norm", &psi_norm, py::arg("w"), py::arg("pot"));
  m.def("grad_psi", &grad_psi, py::arg("w"), py::arg("pot"));
  m.def("inv_grad_psi", &inv_grad_psi, py::arg("z"), py::arg("pot"));
  m.def("bregman", &bregman, py::arg("x"), py::arg("y"), py::arg("pot"));
  m.def("dual_norm", &dual_norm, py::arg("x"), py::arg("pot"));
  m.def("lp_norm", &lp_norm, py::arg("w"), py::arg("r"));

  py::enum_<LossKind>(m, "LossKind")
      .value("exponential", LossKind::exponential)
      .value("logistic", LossKind::logistic)
      .value("square", LossKind::square)
      .value("hinge", LossKind::hinge);
  py::enum_<Reduction>(m, "Reduction")
      .value("sum", Reduction::sum)
      .value("mean", Reduction::mean);
  py::class_<LossSpec>(m, "LossSpec")
      .def(py::init([](LossKind kind, Reduction reduction) {
             return LossSpec{kind, reduction};
           }),
           py::arg("kind") = LossKind::exponential, py::arg("reduction") = Reduction::mean)
      .def_readwrite("kind", &LossSpec::kind)
      .def_readwrite("reduction", &LossSpec::reduction);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<Matrix, Vector>(), py::arg("inputs"), py::arg("labels"))
      .def_property_readonly("inputs", &Dataset::inputs)
      .def_property_readonly("labels", &Dataset::labels)
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("dim", &Dataset::dim);

  m.def("loss_value", &loss_value, py::arg("w"), py::arg("data"), py::arg("spec"));
  m.def("loss_grad", &loss_grad, py::arg("w"), py::arg("data"), py::arg("spec"));
  m.def("margin", &margin, py::arg("w"), py::arg("data"));
  m.def("data_bound_C", &data_bound_C, py::arg("data"), py::arg("pot"));

  m.def("gen_planar2d", &gen_planar2d, py::arg("seed"), py::arg("resign_for_plot") = false);
  m.def("gen_sparse_highdim", &gen_sparse_highdim, py::arg("seed"));
  m.def("save_dataset", &save_dataset, py::arg("data"), py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("path"));

  py::enum_<StepKind>(m, "StepKind")
      .value("fixed", StepKind::fixed)
      .value("normalized", StepKind::normalized);
  py::enum_<MonotonicityPolicy>(m, "MonotonicityPolicy")
      .value("abort", MonotonicityPolicy::abort)
      .value("halve", MonotonicityPolicy::halve);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("pot", &RunConfig::pot)
      .def_readwrite("spec", &RunConfig::spec)
      .def_readwrite("step_kind", &RunConfig::step_kind)
      .def_readwrite("eta", &RunConfig::eta)
      .def_readwrite("lambda_", &RunConfig::lambda)
      .def_readwrite("steps", &RunConfig::steps)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("w0_scale", &RunConfig::w0_scale)
      .def_readwrite("loss_floor", &RunConfig::loss_floor)
      .def_readwrite("record_every", &RunConfig::record_every)
      .def_readwrite("monotonicity", &RunConfig::monotonicity)
      .def_readwrite("warm_start_steps", &RunConfig::warm_start_steps);

  py::class_<OptimizerRun>(m, "OptimizerRun")
      .def_static("init", &OptimizerRun::init, py::arg("config"), py::arg("dim"))
      .def_static("from_w0", &OptimizerRun::from_w0, py::arg("config"), py::arg("w0"))
      .def_readwrite("w", &OptimizerRun::w)
      .def_readwrite("mirror_state", &OptimizerRun::mirror_state)
      .def_readonly("t", &OptimizerRun::t);

  m.def("md_step", &md_step, py::arg("run"), py::arg("data"));
  m.def("pgd_step", &pgd_step, py::arg("run"), py::arg("data"));
  m.def("nmd_step", &nmd_step, py::arg("run"), py::arg("data"));
  m.def("max_safe_eta", &max_safe_eta, py::arg("data"), py::arg("pot"), py::arg("spec"),
        py::arg("w0"));

  py::class_<TraceRow>(m, "TraceRow")
      .def_readonly("t", &TraceRow::t)
      .def_readonly("loss", &TraceRow::loss)
      .def_readonly("psi_norm", &TraceRow::psi_norm_w)
      .def_readonly("margin", &TraceRow::margin_w)
      .def_readonly("eta_effective", &TraceRow::eta_effective)
      .def_readonly("bregman_gap", &TraceRow::bregman_gap)
      .def("__repr__", [](const TraceRow& row) {
        return "TraceRow(t=" + std::to_string(row.t) + ", loss=" + std::to_string(row.loss) + ")";
      });

  m.def(
      "run_trajectory",
      [](const RunConfig& config, const Dataset& data, py::object target) {
        std::optional<Vector> t;
        if (!target.is_none()) t = target.cast<Vector>();
        return run_trajectory(config, data, t);
      },
      py::arg("config"), py::arg("data"), py::arg("target") = py::none());
  m.def(
      "run_trajectory_full",
      [](const RunConfig& config, const Dataset& data, py::object target) {
        std::optional<Vector> t;
        if (!target.is_none()) t = target.cast<Vector>();
        const TrajectoryResult res = run_trajectory_full(config, data, t);
        return py::make_tuple(res.trace, res.final_w);
      },
      py::arg("config"), py::arg("data"), py::arg("target") = py::none());

  py::class_<MaxMarginResult>(m, "MaxMarginResult")
      .def_readonly("direction", &MaxMarginResult::direction)
      .def_readonly("margin_value", &MaxMarginResult::margin_value)
      .def_readonly("margin_lp", &MaxMarginResult::margin_lp)
      .def_readonly("solver_gap", &MaxMarginResult::solver_gap);

  m.def(
      "max_margin",
      [](const Dataset& data, const Potential& pot) { return max_margin(data, pot); },
      py::arg("data"), py::arg("pot"));
  m.def("grid_oracle_2d", &grid_oracle_2d, py::arg("data"), py::arg("pot"),
        py::arg("resolution"));

  py::class_<PathPoint>(m, "PathPoint")
      .def_readonly("budget", &PathPoint::budget)
      .def_readonly("minimizer", &PathPoint::minimizer)
      .def_readonly("loss_at", &PathPoint::loss_at)
      .def_readonly("fw_gap", &PathPoint::fw_gap)
      .def_readonly("iterations", &PathPoint::iterations);

  m.def(
      "regularization_path",
      [](const Dataset& data, const Potential& pot, const LossSpec& spec,
         const std::vector<double>& budgets) {
        return regularization_path(data, pot, spec, budgets);
      },
      py::arg("data"), py::arg("pot"), py::arg("spec"), py::arg("budgets"));
  m.def("rescale_to_unit_margin", &rescale_to_unit_margin, py::arg("w"), py::arg("data"));
  m.def(
      "classifier_norm_table",
      [](const std::vector<std::pair<double, Vector>>& classifiers, const Dataset& data,
         const std::vector<double>& norms) {
        return classifier_norm_table(classifiers, data, norms);
      },
      py::arg("classifiers"), py::arg("data"), py::arg("report_norms"));

  m.def("bregman_gap", &bregman_gap, py::arg("w"), py::arg("target"), py::arg("pot"));

  py::class_<RateFit>(m, "RateFit")
      .def_readonly("slope", &RateFit::slope)
      .def_readonly("intercept", &RateFit::intercept)
      .def_readonly("r_squared", &RateFit::r_squared)
      .def_readonly("t_min", &RateFit::t_min)
      .def_readonly("t_max", &RateFit::t_max);
  py::class_<NormGrowthReport>(m, "NormGrowthReport")
      .def_readonly("fit", &NormGrowthReport::fit)
      .def_readonly("final_ratio", &NormGrowthReport::final_ratio)
      .def_readonly("upper_limit", &NormGrowthReport::upper_limit)
      .def_readonly("upper_ok", &NormGrowthReport::upper_ok)
      .def_readonly("final_norm", &NormGrowthReport::final_norm)
      .def_readonly("lower_bound", &NormGrowthReport::lower_bound)
      .def_readonly("slack", &NormGrowthReport::slack)
      .def_readonly("lower_ok", &NormGrowthReport::lower_ok);

  m.def("fit_norm_growth", &fit_norm_growth, py::arg("trace"), py::arg("mode"), py::arg("pot"),
        py::arg("gamma_hat"), py::arg("data_c"), py::arg("burn_in_fraction") = 0.5,
        py::arg("upper_margin") = 0.10);
  m.def("fit_convergence_rate", &fit_convergence_rate, py::arg("trace"), py::arg("mode"),
        py::arg("burn_in_fraction") = 0.5);

  py::class_<IdentityCheck>(m, "IdentityCheck")
      .def_readonly("name", &IdentityCheck::name)
      .def_readonly("max_error", &IdentityCheck::max_error)
      .def_readonly("tolerance", &IdentityCheck::tolerance)
      .def_readonly("trials", &IdentityCheck::trials)
      .def_readonly("pass_", &IdentityCheck::pass);
  py::class_<IdentityReport>(m, "IdentityReport")
      .def_readonly("checks", &IdentityReport::checks)
      .def("all_pass", &IdentityReport::all_pass);
  m.def("identity_suite", &identity_suite, py::arg("seed"), py::arg("trials") = 1000);
}
