#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>

#include "spowl/envs/grid_cmdp.hpp"
#include "spowl/envs/point_hazard.hpp"
#include "spowl/harness/config.hpp"
#include "spowl/harness/trainer.hpp"
#include "spowl/oracles.hpp"
#include "spowl/representation.hpp"
#include "spowl/safe_policy.hpp"

#include <sstream>

namespace py = pybind11;
using namespace spowl;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Safe model-based RL core: world model, safe policy, planner, training harness";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

    m.def("symlog", [](double x) { return symlog(x); });
    m.def("symexp", [](double x) { return symexp(x); });
    m.def("simnorm",
          [](const Vec& v, int group) { return simnorm(v, SimNormSpec{int(v.size()), group}); },
          py::arg("v"), py::arg("group"));

    py::class_<LagrangianState>(m, "LagrangianState")
        .def(py::init<>())
        .def_readwrite("lam", &LagrangianState::lambda)
        .def_readwrite("mu", &LagrangianState::mu)
        .def_readwrite("nu", &LagrangianState::nu)
        .def_readwrite("budget", &LagrangianState::budget);

    m.def("psi_and_multiplier",
          [](double delta, const LagrangianState& s) {
              PsiResult r = psi_and_multiplier(delta, s);
              return py::make_tuple(r.psi, r.lambda_next);
          },
          py::arg("delta"), py::arg("state"));
    m.def("penalty_update", &penalty_update, py::arg("state"));

    py::class_<StepResult>(m, "StepResult")
        .def_readonly("obs", &StepResult::obs)
        .def_readonly("reward", &StepResult::reward)
        .def_readonly("cost", &StepResult::cost)
        .def_readonly("done", &StepResult::done);

    py::class_<PointHazardConfig>(m, "PointHazardConfig")
        .def(py::init<>())
        .def_readwrite("num_hazards", &PointHazardConfig::num_hazards)
        .def_readwrite("hazard_radius", &PointHazardConfig::hazard_radius)
        .def_readwrite("episode_length", &PointHazardConfig::episode_length)
        .def_readwrite("goal_tolerance", &PointHazardConfig::goal_tolerance);

    py::class_<PointHazardEnv>(m, "PointHazardEnv")
        .def(py::init<>())
        .def(py::init<PointHazardConfig>())
        .def("reset", &PointHazardEnv::reset, py::arg("seed"))
        .def("step", &PointHazardEnv::step, py::arg("action"))
        .def_property_readonly("obs_dim", &PointHazardEnv::obs_dim)
        .def_property_readonly("action_dim", &PointHazardEnv::action_dim);

    py::class_<GridConfig>(m, "GridConfig")
        .def(py::init<>())
        .def_readwrite("size", &GridConfig::size)
        .def_readwrite("noise", &GridConfig::noise)
        .def_readwrite("cell_reward", &GridConfig::cell_reward)
        .def_readwrite("cell_cost", &GridConfig::cell_cost)
        .def_readwrite("episode_length", &GridConfig::episode_length)
        .def_readwrite("start_state", &GridConfig::start_state)
        .def_readwrite("absorbing", &GridConfig::absorbing);

    py::class_<GridCMDP>(m, "GridCMDP")
        .def(py::init<GridConfig>())
        .def("reset", &GridCMDP::reset, py::arg("seed"))
        .def("step", &GridCMDP::step, py::arg("action"))
        .def("kernel", &GridCMDP::kernel, py::arg("action"),
             py::return_value_policy::reference_internal)
        .def_property_readonly("obs_dim", &GridCMDP::obs_dim)
        .def_property_readonly("action_dim", &GridCMDP::action_dim);

    py::class_<EvalSummary>(m, "EvalSummary")
        .def_readonly("return_mean", &EvalSummary::return_mean)
        .def_readonly("return_std", &EvalSummary::return_std)
        .def_readonly("cost_mean", &EvalSummary::cost_mean)
        .def_readonly("cost_std", &EvalSummary::cost_std)
        .def_readonly("balance", &EvalSummary::balance)
        .def_readonly("episodes", &EvalSummary::episodes);

    py::class_<RunConfig>(m, "RunConfig")
        .def_static("from_json", &RunConfig::from_json_text, py::arg("text"))
        .def_static("from_file", &RunConfig::from_file, py::arg("path"))
        .def("to_json", &RunConfig::to_json_text);

    py::class_<Trainer>(m, "Trainer")
        .def(py::init<RunConfig>(), py::arg("config"))
        .def("train", &Trainer::train, py::arg("run_dir"))
        .def("evaluate", &Trainer::evaluate, py::arg("episodes"), py::arg("seed_base"))
        .def("save_checkpoint", &Trainer::save_checkpoint, py::arg("path"))
        .def_static("load_checkpoint", &Trainer::load_checkpoint, py::arg("path"))
        .def_property_readonly("step", &Trainer::step)
        .def_property_readonly("total_cost", &Trainer::total_cost);

    m.def("run_ablation", &run_ablation, py::arg("grid_path"), py::arg("out_dir"));

    m.def("oracle_check", []() {
        std::ostringstream os;
        bool ok = run_oracle_checks(os);
        return py::make_tuple(ok, os.str());
    });
}
