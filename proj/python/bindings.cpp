#include "hswitch/controllability.hpp"
#include "hswitch/errors.hpp"
#include "hswitch/harness.hpp"
#include "hswitch/optimize.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace hswitch;

namespace {

// Specs and records cross the boundary as JSON text; the Python layer parses them.
SpinSystemSpec spec_from(const std::string& text) { return spec_from_json(nlohmann::json::parse(text)); }

py::dict pg_dict(const PGResult& r) {
  py::dict d;
  d["durations"] = r.protocol.durations;
  d["depth"] = r.protocol.depth;
  d["total_time"] = r.protocol.total_time;
  d["fidelity"] = r.report.fidelity;
  d["mli"] = r.report.mli;
  d["best_restart"] = r.best_restart;
  std::vector<double> fids;
  std::vector<std::uint64_t> seeds;
  for (const auto& x : r.restarts) {
    fids.push_back(x.fidelity);
    seeds.push_back(x.seed);
  }
  d["restart_fidelities"] = fids;
  d["restart_seeds"] = seeds;
  d["trace"] = r.trace();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hamiltonian-switching gate optimization core";

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.attr("MLI_CAP") = kMliCap;
  m.def("ns_to_units", &ns_to_units);
  m.def("units_to_ns", &units_to_ns);
  m.def("mli", &mli, py::arg("fidelity"));

  m.def(
      "preset_json",
      [](const std::string& name, std::vector<int> bath_counts, std::uint64_t seed) {
        return to_json(standard_parameter_presets(name, {std::move(bath_counts), seed})).dump();
      },
      py::arg("name"), py::arg("bath_counts"), py::arg("seed") = 0);

  m.def(
      "hamiltonians",
      [](const std::string& spec, const std::string& ansatz) {
        const auto a = build_switching_ansatz(spec_from(spec), parse_ansatz_variant(ansatz));
        std::vector<Matrix> out;
        for (const auto& h : a.hamiltonians) out.push_back(h.matrix());
        return out;
      },
      py::arg("spec"), py::arg("ansatz") = "two_ham_x");

  m.def(
      "lindblad_operators",
      [](const std::string& spec) {
        std::vector<Matrix> out;
        for (const auto& l : build_lindblad_operators(spec_from(spec))) out.push_back(l.matrix());
        return out;
      },
      py::arg("spec"));

  m.def(
      "target", [](const std::string& gate, int n_qubits) { return build_target(parse_gate_name(gate), n_qubits).matrix.matrix(); },
      py::arg("gate"), py::arg("n_qubits") = 1);

  m.def(
      "unitary", [](const std::string& spec, const std::string& ansatz, std::vector<double> durations) {
        return SwitchingPropagator(build_switching_ansatz(spec_from(spec), parse_ansatz_variant(ansatz))).unitary(durations);
      },
      py::arg("spec"), py::arg("ansatz"), py::arg("durations"));

  m.def("unitary_fidelity", &unitary_fidelity_value, py::arg("u"), py::arg("w"));
  m.def("trace_norm", [](const Matrix& q) { return trace_norm(q); }, py::arg("q"));
  m.def(
      "partial_trace",
      [](const Matrix& op, std::vector<int> dims, std::vector<int> keep) {
        return partial_trace(DenseOperator(op, std::move(dims)), keep).matrix();
      },
      py::arg("op"), py::arg("dims"), py::arg("keep"));

  m.def(
      "pg_optimize",
      [](const std::string& spec, const std::string& gate, int depth, double total_time, std::uint64_t seed,
         int iterations, int batch_size, int restarts, const std::string& ansatz, const std::string& fidelity_kind,
         int jobs) {
        const auto s = spec_from(spec);
        const auto a = build_switching_ansatz(s, parse_ansatz_variant(ansatz));
        PGConfig cfg;
        cfg.depth = depth;
        cfg.total_time = total_time;
        cfg.seed = seed;
        cfg.iterations = iterations;
        cfg.batch_size = batch_size;
        cfg.restarts = restarts;
        cfg.jobs = jobs;
        const auto kind = parse_fidelity_kind(fidelity_kind);
        PGResult r;
        {
          py::gil_scoped_release release;
          r = pg_optimize(a, build_target(parse_gate_name(gate), s.n_qubits), cfg, kind, build_lindblad_operators(s));
        }
        return pg_dict(r);
      },
      py::arg("spec"), py::arg("gate"), py::arg("depth"), py::arg("total_time"), py::arg("seed"),
      py::arg("iterations") = 2000, py::arg("batch_size") = 32, py::arg("restarts") = 5,
      py::arg("ansatz") = "two_ham_x", py::arg("fidelity_kind") = "unitary", py::arg("jobs") = 1);

  m.def(
      "grape_refine",
      [](const std::string& spec, const std::string& gate, std::vector<double> durations, const std::string& ansatz,
         double lower, double upper, int max_iterations) {
        const auto s = spec_from(spec);
        const auto a = build_switching_ansatz(s, parse_ansatz_variant(ansatz));
        GrapeConfig cfg;
        cfg.lower = lower;
        cfg.upper = upper;
        cfg.max_iterations = max_iterations;
        const auto base = SwitchingProtocol::from_durations(std::move(durations), static_cast<int>(a.size()));
        const auto r = grape_refine(a, base, build_target(parse_gate_name(gate), s.n_qubits), cfg);
        py::dict d;
        d["amplitudes"] = r.amplitudes.amplitudes;
        d["initial_fidelity"] = r.initial.fidelity;
        d["fidelity"] = r.report.fidelity;
        d["mli"] = r.report.mli;
        d["iterations"] = r.iterations;
        d["gradient_check_error"] = r.gradient_check_error;
        return d;
      },
      py::arg("spec"), py::arg("gate"), py::arg("durations"), py::arg("ansatz") = "two_ham_x",
      py::arg("lower") = -1.2, py::arg("upper") = 1.2, py::arg("max_iterations") = 500);

  m.def(
      "lie_algebra_dimension",
      [](const std::string& spec, const std::string& ansatz) {
        const auto a = build_switching_ansatz(spec_from(spec), parse_ansatz_variant(ansatz));
        return lie_closure(skew_generators(a.hamiltonians)).dimension();
      },
      py::arg("spec"), py::arg("ansatz") = "two_ham_x");

  m.def("controllability_table", [] {
    py::list out;
    for (const auto& r : controllability_table(standard_table_specs())) {
      py::dict d;
      d["coupling"] = to_string(r.coupling);
      d["frame"] = to_string(r.frame);
      d["equal_couplings"] = r.equal_couplings;
      d["dimension"] = r.algebra_dimension;
      d["qubit_controllable"] = r.qubit_controllable;
      d["bath_controllable"] = r.bath_controllable;
      out.append(d);
    }
    return out;
  });

  m.def(
      "recursion_rows",
      [](const std::string& scheme, double g, double h, double eps, int s_max) {
        return build_recursion_table(parse_recursion_scheme(scheme), g, h, eps, s_max).rows;
      },
      py::arg("scheme"), py::arg("g"), py::arg("h"), py::arg("eps") = 1.0, py::arg("s_max") = 6);
  m.def(
      "recursion_determinant",
      [](const std::string& scheme, double g, double h, double eps, std::vector<int> orders) {
        return recursion_determinant(parse_recursion_scheme(scheme), g, h, eps, orders);
      },
      py::arg("scheme"), py::arg("g"), py::arg("h"), py::arg("eps"), py::arg("orders"));

  m.def(
      "reduced_dynamics",
      [](const std::string& spec, std::vector<double> t_grid) { return reduced_dynamics_no_control(spec_from(spec), t_grid); },
      py::arg("spec"), py::arg("t_grid"));

  m.def(
      "run_experiment_json",
      [](const std::string& toml_text, std::optional<int> jobs) {
        const auto cfg = parse_experiment_config(toml_text, "<python>");
        RunOptions opts;
        opts.jobs = jobs;
        std::vector<ResultRecord> records;
        {
          py::gil_scoped_release release;
          records = run_experiment(cfg, opts);
        }
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : records) arr.push_back(to_json(r));
        return arr.dump();
      },
      py::arg("toml_text"), py::arg("jobs") = py::none());

  m.def(
      "critical_points_json",
      [](const std::string& records_json) {
        std::vector<ResultRecord> records;
        for (const auto& j : nlohmann::json::parse(records_json)) records.push_back(record_from_json(j));
        nlohmann::json out = nlohmann::json::array();
        for (const auto& g : estimate_critical_points(records).groups) {
          out.push_back({{"n", g.n},
                         {"gate", to_string(g.gate)},
                         {"t_star", g.t_star},
                         {"t_star_at_boundary", g.t_star_at_boundary},
                         {"p_star", g.p_star ? nlohmann::json(*g.p_star) : nlohmann::json(nullptr)},
                         {"plateau_mli", g.plateau_mli}});
        }
        return out.dump();
      },
      py::arg("records_json"));

  m.def(
      "reevaluate_json", [](const std::string& record_json) { return reevaluate(record_from_json(nlohmann::json::parse(record_json))); },
      py::arg("record_json"));
}
