#include "gkpsim/circuit.hpp"
#include "gkpsim/fluxnoise.hpp"
#include "gkpsim/harness.hpp"
#include "gkpsim/logical.hpp"
#include "gkpsim/protocol.hpp"
#include "gkpsim/quadratures.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace gkpsim;

namespace {

py::dict point_dict(const SweepPoint& p) {
    py::dict d;
    d["axis"] = p.axis;
    d["infidelity"] = p.infidelity;
    d["stderr"] = p.std_error;
    d["n_traj"] = p.n_traj;
    d["n_resample"] = p.n_resample;
    d["seed"] = p.seed;
    d["resolution_limited"] = p.resolution_limited;
    d["error"] = p.error;
    d["mean_bloch"] = std::array<double, 3>{p.mean_bloch.x, p.mean_bloch.y, p.mean_bloch.z};
    d["target"] = std::array<double, 3>{p.target.x, p.target.y, p.target.z};
    d["t_gate_ns"] = p.t_gate_ns;
    d["mean_jumps"] = p.mean_jumps;
    d["max_edge_probability"] = p.max_edge_probability;
    d["leakage_trips"] = p.leakage_trips;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "GKP √T gate simulator core";

    py::class_<CircuitParams>(m, "CircuitParams")
        .def(py::init<>())
        .def_readwrite("name", &CircuitParams::name)
        .def_readwrite("L_uH", &CircuitParams::L_uH)
        .def_readwrite("C_fF", &CircuitParams::C_fF)
        .def_readwrite("J", &CircuitParams::J)
        .def_readwrite("Gamma_GHz", &CircuitParams::Gamma_GHz)
        .def_readwrite("T_mK", &CircuitParams::T_mK)
        .def_readwrite("has_ancilla", &CircuitParams::has_ancilla)
        .def_readwrite("L_anc_uH", &CircuitParams::L_anc_uH)
        .def_readwrite("J_anc", &CircuitParams::J_anc)
        .def_readwrite("C_junc_fF", &CircuitParams::C_junc_fF)
        .def("capacitance", &CircuitParams::capacitance)
        .def("total_inductance", &CircuitParams::total_inductance)
        .def("validate", &CircuitParams::validate)
        .def("to_json", [](const CircuitParams& p) { return circuit_to_json(p); });

    m.def("table_set", &table_set, py::arg("index"));
    m.def("table_gate_time_us", &table_gate_time_us, py::arg("index"));
    m.def("load_circuit", &load_circuit, py::arg("path"));
    m.def("circuit_from_json", &circuit_from_json, py::arg("text"));

    py::class_<EffectivePotential>(m, "EffectivePotential")
        .def_readonly("V", &EffectivePotential::V)
        .def_readonly("residual", &EffectivePotential::residual)
        .def_readonly("quadratic_residual", &EffectivePotential::quadratic_residual)
        .def("value", &EffectivePotential::value)
        .def("hamiltonian_terms", &EffectivePotential::hamiltonian_terms);
    m.def("fit_effective_potential", [](const CircuitParams& p) { return fit_effective_potential(p); }, py::arg("circuit"));
    m.def("minimize_potential", &minimize_potential, py::arg("circuit"), py::arg("x"),
          py::arg("vacuum_correction") = false);

    py::class_<DerivedScales>(m, "DerivedScales")
        .def_readonly("f_LC", &DerivedScales::f_LC)
        .def_readonly("lambda0", &DerivedScales::lambda0)
        .def_readonly("eps0", &DerivedScales::eps0)
        .def_readonly("eps_L", &DerivedScales::eps_L)
        .def_readonly("E_C", &DerivedScales::E_C)
        .def_readonly("kappa", &DerivedScales::kappa)
        .def_readonly("t_rev", &DerivedScales::t_rev)
        .def_readonly("t4", &DerivedScales::t4)
        .def_readonly("t2", &DerivedScales::t2)
        .def_readonly("t_gate", &DerivedScales::t_gate);
    m.def("derived_scales", &derived_scales, py::arg("circuit"), py::arg("V4"), py::arg("V2") = 0.0);
    m.def("base_scales", &base_scales, py::arg("circuit"));

    py::class_<NormalModes>(m, "NormalModes")
        .def_readonly("omega", &NormalModes::omega)
        .def_readonly("temperature", &NormalModes::temperature);
    m.def("normal_mode_frequencies", &normal_mode_frequencies, py::arg("circuit"), py::arg("N_well") = 0);

    py::class_<QuadratureGrid>(m, "QuadratureGrid")
        .def_readonly("D", &QuadratureGrid::D)
        .def_readonly("X", &QuadratureGrid::X)
        .def_readonly("dx", &QuadratureGrid::dx)
        .def_readonly("dp", &QuadratureGrid::dp)
        .def_readonly("x", &QuadratureGrid::x)
        .def_readonly("p", &QuadratureGrid::p);
    m.def("build_grid", &build_grid, py::arg("D"), py::arg("X"));
    m.def("hamiltonian_lcj",
          [](const QuadratureGrid& g, double L, double C, double J) { return hamiltonian_lcj(g, L, C, J).matrix; },
          py::arg("grid"), py::arg("L_uH"), py::arg("C_fF"), py::arg("J"));
    m.def("eigenvalues", [](const Eigen::MatrixXcd& H) {
        HermitianOperator op;
        op.matrix = H;
        return diagonalize(op).values;
    });

    py::class_<NoiseSpectrum>(m, "NoiseSpectrum")
        .def(py::init<>())
        .def_readwrite("gamma_phi", &NoiseSpectrum::gamma_phi)
        .def_readwrite("Omega", &NoiseSpectrum::Omega)
        .def_readwrite("omega0", &NoiseSpectrum::omega0)
        .def_readwrite("Lambda", &NoiseSpectrum::Lambda)
        .def("psd", &NoiseSpectrum::psd)
        .def("shape_integral", &NoiseSpectrum::shape_integral);
    m.def("jump_correlator", &jump_correlator, py::arg("t"), py::arg("spectrum"));
    m.def("target_autocorrelation", &target_autocorrelation, py::arg("tau"), py::arg("spectrum"));
    m.def(
        "noise_signal",
        [](const NoiseSpectrum& spec, std::uint64_t seed) {
            NoiseSignal s = generate_signal(spec, build_noise_grid(spec), seed, default_eval_times());
            return py::make_tuple(s.times(), s.values());
        },
        py::arg("spectrum"), py::arg("seed"));

    m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("a"), py::arg("b") = 0, py::arg("c") = 0);
    m.def(
        "sample_mistargeting",
        [](const CircuitParams& c, double u, std::uint64_t seed) { return sample_mistargeting(c, u, seed).circuit; },
        py::arg("circuit"), py::arg("u"), py::arg("seed"));
    m.def(
        "aggregate",
        [](const std::vector<std::array<double, 3>>& results, const std::array<double, 3>& target) {
            std::vector<BlochVector> r;
            for (const auto& v : results) r.push_back({v[0], v[1], v[2]});
            Aggregate a = aggregate(r, {target[0], target[1], target[2]});
            return py::make_tuple(std::array<double, 3>{a.mean.x, a.mean.y, a.mean.z}, a.fidelity, a.std_error);
        },
        py::arg("results"), py::arg("target"));

    m.def(
        "run_experiment_json",
        [](const std::string& config, unsigned threads) {
            ExperimentConfig cfg = experiment_from_json(config);
            SweepResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(cfg, threads);
            }
            py::list pts;
            for (const auto& p : r.points) pts.append(point_dict(p));
            return pts;
        },
        py::arg("config"), py::arg("threads") = 1);
    m.def("experiment_config_json",
          [](const std::string& config) { return experiment_to_json(experiment_from_json(config)); },
          py::arg("config"), "Normalized configuration with defaults filled in.");
}
