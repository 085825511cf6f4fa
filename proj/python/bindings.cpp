#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gridvolterra/errors.hpp"
#include "gridvolterra/features.hpp"
#include "gridvolterra/grid.hpp"
#include "gridvolterra/identify.hpp"
#include "gridvolterra/io.hpp"
#include "gridvolterra/powerflow.hpp"
#include "gridvolterra/solver.hpp"
#include "gridvolterra/version.hpp"

namespace py = pybind11;
using namespace gridvolterra;

PYBIND11_MODULE(_core, m) {
    m.doc() = "radial grid topology and second-order interaction identification";
    m.attr("__version__") = kVersion;

    py::register_exception<Error>(m, "GridVolterraError", PyExc_RuntimeError);

    py::class_<Line>(m, "Line")
        .def(py::init<>())
        .def(py::init([](BusId child, BusId parent, double r, double x) {
                 return Line{child, parent, r, x};
             }),
             py::arg("child"), py::arg("parent"), py::arg("r"), py::arg("x"))
        .def_readwrite("child", &Line::child)
        .def_readwrite("parent", &Line::parent)
        .def_readwrite("r", &Line::r)
        .def_readwrite("x", &Line::x)
        .def("__repr__", [](const Line& l) {
            return "Line(child=" + std::to_string(l.child) + ", parent=" +
                   std::to_string(l.parent) + ", r=" + std::to_string(l.r) + ", x=" +
                   std::to_string(l.x) + ")";
        });

    py::class_<RadialGrid>(m, "RadialGrid")
        .def_property_readonly("num_buses", &RadialGrid::num_buses)
        .def("line", &RadialGrid::line, py::arg("n"))
        .def("parent", &RadialGrid::parent, py::arg("n"))
        .def("children", &RadialGrid::children, py::arg("j"))
        .def_property_readonly("lines", &RadialGrid::lines)
        .def_property_readonly("topological_order", &RadialGrid::topological_order)
        .def_property_readonly("resistances", &RadialGrid::resistances)
        .def_property_readonly("reactances", &RadialGrid::reactances);

    py::class_<GroundTruth>(m, "GroundTruth")
        .def_readonly("edges", &GroundTruth::edges)
        .def_readonly("triads", &GroundTruth::triads);

    m.def("build_grid", &build_grid, py::arg("lines"));
    m.def("synth_grid", &synth_grid, py::arg("num_buses"), py::arg("seed"),
          py::arg("degree_bias") = 0.0);
    m.def("sensitivity_matrices", &sensitivity_matrices, py::arg("grid"));
    m.def("ground_truth_sets", &ground_truth_sets, py::arg("grid"));

    py::class_<InjectionProfile>(m, "InjectionProfile")
        .def(py::init<>())
        .def_readwrite("p", &InjectionProfile::p)
        .def_readwrite("q", &InjectionProfile::q)
        .def_readwrite("v0", &InjectionProfile::v0);

    py::class_<PowerFlowState>(m, "PowerFlowState")
        .def_readonly("v", &PowerFlowState::v)
        .def_readonly("S", &PowerFlowState::S)
        .def_readonly("ell", &PowerFlowState::ell);

    py::class_<VoltageSeries>(m, "VoltageSeries")
        .def(py::init<>())
        .def_readwrite("V", &VoltageSeries::V)
        .def_readwrite("timestamps", &VoltageSeries::timestamps);

    py::enum_<FlowModel>(m, "FlowModel")
        .value("Exact", FlowModel::Exact)
        .value("Linear", FlowModel::Linear);

    m.def("solve_exact", &solve_exact, py::arg("grid"), py::arg("p"), py::arg("q"),
          py::arg("v0") = 1.0, py::arg("tol") = 1e-10, py::arg("max_iter") = 200);
    m.def("solve_linear", &solve_linear, py::arg("grid"), py::arg("p"), py::arg("q"),
          py::arg("v0") = 1.0);
    m.def("branch_flow_residual", &branch_flow_residual, py::arg("grid"), py::arg("p"),
          py::arg("q"), py::arg("v0"), py::arg("state"));
    m.def("simulate_series", &simulate_series, py::arg("grid"), py::arg("profile"),
          py::arg("model") = FlowModel::Exact, py::arg("tol") = 1e-10, py::arg("max_iter") = 200,
          py::arg("jobs") = 1);
    m.def("synth_profiles", &synth_profiles, py::arg("grid"), py::arg("T"), py::arg("seed"),
          py::arg("base_load") = 0.01, py::arg("volatility") = 0.4,
          py::arg("solar_fraction") = 0.3);
    m.def("apply_noise", &apply_noise, py::arg("series"), py::arg("noise_std"), py::arg("seed"));

    py::class_<FeatureMatrix>(m, "FeatureMatrix")
        .def_readonly("M", &FeatureMatrix::M)
        .def_readonly("num_buses", &FeatureMatrix::num_buses);

    py::class_<VolterraKernels>(m, "VolterraKernels")
        .def_readonly("n", &VolterraKernels::n)
        .def_readonly("rho1", &VolterraKernels::rho1)
        .def_readonly("rho2", &VolterraKernels::rho2)
        .def("pair", &VolterraKernels::pair, py::arg("i"), py::arg("j"));

    py::class_<StackedModel>(m, "StackedModel")
        .def_readonly("V1", &StackedModel::V1)
        .def_readonly("V2", &StackedModel::V2)
        .def_readonly("R1", &StackedModel::R1)
        .def_readonly("R2", &StackedModel::R2)
        .def_readonly("E", &StackedModel::E);

    m.def("reduced_kron", &reduced_kron, py::arg("v"));
    m.def("build_feature_matrix", &build_feature_matrix, py::arg("series"));
    m.def("assemble_stacked", &assemble_stacked, py::arg("series"), py::arg("kernels"));

    py::enum_<StepPolicy>(m, "StepPolicy")
        .value("Fixed", StepPolicy::Fixed)
        .value("Backtracking", StepPolicy::Backtracking);

    py::enum_<SolveStatus>(m, "SolveStatus")
        .value("Converged", SolveStatus::Converged)
        .value("MaxIter", SolveStatus::MaxIter);

    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init<>())
        .def_readwrite("lambda_", &SolverConfig::lambda)
        .def_readwrite("mu", &SolverConfig::mu)
        .def_readwrite("tol", &SolverConfig::tol)
        .def_readwrite("max_iter", &SolverConfig::max_iter)
        .def_readwrite("step", &SolverConfig::step)
        .def_readwrite("sweep", &SolverConfig::sweep)
        .def_readwrite("holdout_fraction", &SolverConfig::holdout_fraction)
        .def_readwrite("sweep_lambda_points", &SolverConfig::sweep_lambda_points)
        .def_readwrite("sweep_mu_fraction", &SolverConfig::sweep_mu_fraction)
        .def_readwrite("sweep_slack", &SolverConfig::sweep_slack)
        .def_readwrite("enforce_hierarchy", &SolverConfig::enforce_hierarchy)
        .def_readwrite("jobs", &SolverConfig::jobs);

    py::class_<BusSolution>(m, "BusSolution")
        .def_readonly("theta", &BusSolution::theta)
        .def_readonly("objective_trace", &BusSolution::objective_trace)
        .def_readonly("status", &BusSolution::status)
        .def_readonly("iterations", &BusSolution::iterations)
        .def_readonly("certificate", &BusSolution::certificate)
        .def_readonly("grad_norm", &BusSolution::grad_norm)
        .def_readonly("lambda_", &BusSolution::lambda)
        .def_readonly("mu", &BusSolution::mu)
        .def_readonly("warning", &BusSolution::warning);

    py::class_<IdentifyResult>(m, "IdentifyResult")
        .def_readonly("kernels", &IdentifyResult::kernels)
        .def_readonly("stacked", &IdentifyResult::stacked)
        .def_readonly("solutions", &IdentifyResult::solutions)
        .def_readonly("hierarchy_zeroed", &IdentifyResult::hierarchy_zeroed);

    m.def("solve_all", &solve_all, py::arg("series"), py::arg("features"), py::arg("cfg"));

    py::class_<EdgeScores>(m, "EdgeScores").def_readonly("S", &EdgeScores::S);

    py::class_<TriadScores>(m, "TriadScores")
        .def_readonly("num_buses", &TriadScores::num_buses)
        .def_readonly("score", &TriadScores::score);

    py::class_<RocPoint>(m, "RocPoint")
        .def_readonly("threshold", &RocPoint::threshold)
        .def_readonly("fpr", &RocPoint::fpr)
        .def_readonly("tpr", &RocPoint::tpr);

    py::class_<RocCurve>(m, "RocCurve")
        .def_readonly("points", &RocCurve::points)
        .def_readonly("auc", &RocCurve::auc)
        .def_readonly("positives", &RocCurve::positives)
        .def_readonly("negatives", &RocCurve::negatives);

    m.def("edge_scores_from_kernels", &edge_scores_from_kernels, py::arg("kernels"));
    m.def("triad_scores_from_kernels", &triad_scores_from_kernels, py::arg("kernels"));
    m.def("roc_edges", &roc_edges, py::arg("scores"), py::arg("truth"));
    m.def("roc_triads", &roc_triads, py::arg("scores"), py::arg("truth"));
    m.def("baseline_linear_pc", &baseline_linear_pc, py::arg("series"),
          py::arg("allow_ridge") = true);
    m.def("baseline_concentration", &baseline_concentration, py::arg("series"),
          py::arg("allow_ridge") = true);

    py::class_<EvaluationReport>(m, "EvaluationReport")
        .def_readonly("methods", &EvaluationReport::methods)
        .def_readonly("edge_scores", &EvaluationReport::edge_scores)
        .def_readonly("edge_roc", &EvaluationReport::edge_roc)
        .def_readonly("triads", &EvaluationReport::triads)
        .def_readonly("triad_roc", &EvaluationReport::triad_roc)
        .def_readonly("has_triads", &EvaluationReport::has_triads)
        .def_readonly("identify", &EvaluationReport::identify);

    m.def("evaluate", &evaluate, py::arg("grid"), py::arg("series"), py::arg("cfg"),
          py::arg("methods") = std::vector<std::string>{"volterra", "pc", "concentration"});

    m.def("save_grid", &save_grid, py::arg("grid"), py::arg("path"));
    m.def("load_grid", &load_grid, py::arg("path"));
    m.def("save_series", &save_series, py::arg("series"), py::arg("path"));
    m.def("load_series", &load_series, py::arg("path"));
    m.def("save_profiles", &save_profiles, py::arg("profile"), py::arg("path"));
    m.def("load_profiles", &load_profiles, py::arg("path"));
    m.def("save_kernels", &save_kernels, py::arg("kernels"), py::arg("path"));
    m.def("load_kernels", &load_kernels, py::arg("path"));
    m.def("save_report", &save_report, py::arg("report"), py::arg("dir"));
}
