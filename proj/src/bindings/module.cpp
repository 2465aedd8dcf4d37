#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "ocmsfem/experiment.hpp"

namespace py = pybind11;
using namespace ocmsfem;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Operator-compressed multiscale FEM for the 1D periodic semiclassical "
            "Schrodinger equation";

  py::class_<PeriodicGridPair>(m, "PeriodicGridPair")
      .def_readonly("n_coarse", &PeriodicGridPair::n_coarse)
      .def_readonly("refine_factor", &PeriodicGridPair::refine_factor)
      .def_property_readonly("n_fine", &PeriodicGridPair::n_fine)
      .def_property_readonly("coarse_h", &PeriodicGridPair::coarse_h)
      .def_property_readonly("fine_h", &PeriodicGridPair::fine_h)
      .def("fine_node", &PeriodicGridPair::fine_node);
  m.def("build_grid_pair", &build_grid_pair, py::arg("n_coarse"), py::arg("refine_factor"));

  py::class_<Patch>(m, "Patch")
      .def_readonly("center_node", &Patch::center_node)
      .def_readonly("layers", &Patch::layers)
      .def_readonly("first_element", &Patch::first_element)
      .def_readonly("n_elements", &Patch::n_elements)
      .def_readonly("saturated", &Patch::saturated);
  m.def("patch", &patch, py::arg("grid"), py::arg("j"), py::arg("m"));

  py::class_<PotentialField>(m, "PotentialField")
      .def_readonly("v_min", &PotentialField::v_min)
      .def_readonly("v_max", &PotentialField::v_max)
      .def_readonly("delta_tags", &PotentialField::delta_tags)
      .def_readonly("discontinuities", &PotentialField::discontinuities)
      .def_property_readonly("samples",
                             [](const PotentialField& f) { return Eigen::MatrixXd(f.samples); });
  m.def("smooth_potential", &smooth_potential, py::arg("delta"), py::arg("grid"),
        py::arg("shift") = 0.0);
  m.def("discontinuous_potential", &discontinuous_potential, py::arg("delta1"), py::arg("delta2"),
        py::arg("grid"), py::arg("shift") = 0.0);
  m.def("gaussian_wavepacket_samples",
        [](double epsilon, int n) { return sample_uniform(gaussian_wavepacket(epsilon), n); },
        py::arg("epsilon"), py::arg("n"));

  py::class_<FineOperators>(m, "FineOperators")
      .def_property_readonly("mass", [](const FineOperators& o) { return SparseMat(o.mass); })
      .def_property_readonly("stiffness",
                             [](const FineOperators& o) { return SparseMat(o.stiffness); })
      .def_property_readonly("weighted_mass",
                             [](const FineOperators& o) { return SparseMat(o.weighted_mass); })
      .def_property_readonly("hamiltonian",
                             [](const FineOperators& o) { return SparseMat(o.hamiltonian); })
      .def_property_readonly("prolongation",
                             [](const FineOperators& o) { return SparseMat(o.prolongation); })
      .def_property_readonly("constraint",
                             [](const FineOperators& o) { return SparseMat(o.constraint); });
  m.def("assemble_fine_operators", &assemble_fine_operators, py::arg("grid"),
        py::arg("potential"), py::arg("epsilon"));

  py::class_<MultiscaleBasis>(m, "MultiscaleBasis")
      .def_property_readonly("n_basis", &MultiscaleBasis::n_basis)
      .def_property_readonly("layers", &MultiscaleBasis::layers)
      .def("column", &MultiscaleBasis::column)
      .def("matrix", [](const MultiscaleBasis& b) {
        return b.kind() == BasisKind::global ? b.dense() : Eigen::MatrixXd(b.sparse());
      });
  m.def("build_global_basis",
        py::overload_cast<const PeriodicGridPair&, double, const PotentialField&>(
            &build_global_basis),
        py::arg("grid"), py::arg("epsilon"), py::arg("potential"));
  m.def("build_localized_basis",
        py::overload_cast<const PeriodicGridPair&, double, const PotentialField&, int>(
            &build_localized_basis),
        py::arg("grid"), py::arg("epsilon"), py::arg("potential"), py::arg("m"));
  m.def("default_oversampling", &default_oversampling, py::arg("n_coarse"), py::arg("c"));

  py::class_<DecayProfile>(m, "DecayProfile")
      .def_readonly("node", &DecayProfile::node)
      .def_readonly("ratios", &DecayProfile::ratios)
      .def_property_readonly("beta", [](const DecayProfile& p) -> py::object {
        return p.beta ? py::cast(*p.beta) : py::none();
      });
  m.def("measure_decay", &measure_decay, py::arg("basis"), py::arg("j"), py::arg("m_max"));

  py::class_<TrajectoryResult>(m, "TrajectoryResult")
      .def_readonly("final_state", &TrajectoryResult::final_state)
      .def_readonly("step_log", &TrajectoryResult::step_log)
      .def_readonly("mass_log", &TrajectoryResult::mass_log)
      .def_readonly("energy_log", &TrajectoryResult::energy_log)
      .def_readonly("wall_seconds", &TrajectoryResult::wall_seconds);

  m.def("tssp_evolve",
        [](const Eigen::VectorXcd& u0, const Eigen::VectorXd& v, double T, double dt,
           double epsilon) { return tssp_evolve(u0, v, make_evolution_config(T, dt, epsilon)); },
        py::arg("u0"), py::arg("v_nodes"), py::arg("T"), py::arg("dt"), py::arg("epsilon"));

  m.def("fem_cn_evolve",
        [](const FineOperators& ops, const Eigen::VectorXcd& u0, double T, double dt) {
          Eigen::VectorXcd fine;
          TrajectoryResult res =
              fem_cn_evolve(ops, u0, make_evolution_config(T, dt, ops.epsilon), &fine);
          return py::make_tuple(res, fine);
        },
        py::arg("ops"), py::arg("u0_fine"), py::arg("T"), py::arg("dt"));

  m.def("msfem_cn_evolve",
        [](MultiscaleBasis basis, const FineOperators& ops, const Eigen::VectorXcd& u0,
           double T, double dt) {
          GalerkinSpace space = GalerkinSpace::multiscale(std::move(basis), ops);
          const Eigen::VectorXcd U0 = elliptic_project(u0, space, ops);
          TrajectoryResult res = cn_evolve(space, U0, make_evolution_config(T, dt, ops.epsilon));
          return py::make_tuple(res, Eigen::VectorXcd(space.prolong(res.final_state)));
        },
        py::arg("basis"), py::arg("ops"), py::arg("u0_fine"), py::arg("T"), py::arg("dt"));

  m.def("relative_errors",
        [](const Eigen::VectorXcd& num, const Eigen::VectorXcd& ref, const SparseMat& mass,
           const SparseMat& stiffness) {
          WaveFunction a{num, SpaceTag::fine_nodal}, b{ref, SpaceTag::fine_nodal};
          return relative_errors(a, b, mass, stiffness);
        },
        py::arg("u_num"), py::arg("u_ref"), py::arg("mass"), py::arg("stiffness"));
  m.def("fit_orders", &fit_orders, py::arg("h_values"), py::arg("errors"));
  m.def("trig_resample", &trig_resample, py::arg("samples"), py::arg("n_out"));

  m.def("validate_config",
        [](const std::string& config_json) {
          const auto cfg = config_from_json(nlohmann::json::parse(config_json));
          std::vector<std::pair<bool, std::string>> out;
          for (const auto& d : validate_config(cfg)) out.emplace_back(d.is_error, d.message);
          return out;
        },
        py::arg("config_json"));

  m.def("run_experiment",
        [](const std::string& config_json, int threads, int log_level) {
          const auto cfg = config_from_json(nlohmann::json::parse(config_json));
          RunOptions opts;
          opts.threads = threads;
          opts.log_level = log_level;
          return report_to_json(run_experiment(cfg, opts)).dump();
        },
        py::arg("config_json"), py::arg("threads") = 1, py::arg("log_level") = 0);
}
