// Command-line driver: sweeps, GRAPE refinement, baselines, controllability,
// landscape diagnostics and curve re-emission.

#include "hswitch/controllability.hpp"
#include "hswitch/errors.hpp"
#include "hswitch/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace hswitch;
using nlohmann::json;

namespace {

constexpr int kExitPartial = 2;

// stdout when path is empty.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error("cannot open " + path + " for writing");
    }
  }
  std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<ResultRecord> load_records(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") return read_records_json(path);
  return read_records_jsonl(path);
}

int report_errors(const std::vector<ResultRecord>& records) {
  int failed = 0;
  for (const auto& r : records) {
    if (!r.ok()) {
      std::cerr << "error: " << *r.error << "\n";
      ++failed;
    }
  }
  if (failed) std::cerr << failed << " of " << records.size() << " points failed\n";
  return failed ? kExitPartial : 0;
}

void print_summary(const std::vector<ResultRecord>& records) {
  try {
    const SweepSummary s = estimate_critical_points(records);
    for (const auto& g : s.groups) {
      std::printf("n=%s gate=%s T*=%.6g%s p*=%s plateau_mli=%.3f\n", format_n(g.n).c_str(),
                  to_string(g.gate).c_str(), g.t_star, g.t_star_at_boundary ? " (boundary)" : "",
                  g.p_star ? std::to_string(*g.p_star).c_str() : "-", g.plateau_mli);
    }
  } catch (const InvalidArgument& e) {
    std::printf("critical points: %s\n", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian-switching control of a qubit in a spin bath"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string records_path;
  std::uint64_t seed = 0;
  int jobs = 0;
  int restarts = 0;

  auto* run = app.add_subcommand("run", "optimize every sweep point of a config");
  run->add_option("--config", config, "experiment TOML")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "master seed override");
  run->add_option("--out", out, "JSON-lines output (overrides the config)");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--restarts", restarts, "PG restarts per point")->check(CLI::PositiveNumber);
  std::string curves_out;
  run->add_option("--curves", curves_out, "also write the curve CSV here");

  auto* refine = app.add_subcommand("refine", "GRAPE pass over stored records");
  refine->add_option("--records", records_path, "records (.jsonl or .json)")->required()->check(CLI::ExistingFile);
  refine->add_option("--out", out, "refined JSON-lines output")->required();
  refine->add_option("--jobs", jobs, "ignored; refinement is sequential");
  GrapeConfig gc;
  refine->add_option("--max-iterations", gc.max_iterations, "BFGS iterations");
  refine->add_option("--lower", gc.lower, "lower amplitude bound");
  refine->add_option("--upper", gc.upper, "upper amplitude bound");

  auto* baseline = app.add_subcommand("baseline", "no-control fidelity and control-free reduced dynamics");
  baseline->add_option("--config", config, "experiment TOML")->required()->check(CLI::ExistingFile);
  baseline->add_option("--out", out, "CSV output (stdout by default)");
  bool dynamics = false;
  double t_max = 2.0;
  int steps = 200;
  bool in_ns = false;
  baseline->add_flag("--dynamics", dynamics, "emit <0|rho_S(t)|0> instead of gate baselines");
  baseline->add_option("--t-max", t_max, "end of the time grid");
  baseline->add_option("--steps", steps, "grid intervals")->check(CLI::PositiveNumber);
  baseline->add_flag("--ns", in_ns, "time grid in nanoseconds");

  auto* control = app.add_subcommand("controllability", "Lie closure table and recursion determinants");
  control->add_option("--out", out, "JSON output (stdout table by default)");

  auto* landscape = app.add_subcommand("landscape", "gradient and Hessian spectrum at stored protocols");
  landscape->add_option("--records", records_path, "records (.jsonl or .json)")->required()->check(CLI::ExistingFile);
  landscape->add_option("--out", out, "JSON-lines output (stdout by default)");

  auto* curves = app.add_subcommand("curves", "re-emit curve data from stored records");
  curves->add_option("--records", records_path, "records (.jsonl or .json)")->required()->check(CLI::ExistingFile);
  curves->add_option("--out", out, "output file")->required();
  std::string format = "csv";
  curves->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const ExperimentConfig cfg = load_experiment_config(config);
      RunOptions opts;
      if (run->count("--seed")) opts.seed = seed;
      if (jobs > 0) opts.jobs = jobs;
      if (restarts > 0) opts.restarts = restarts;
      if (!out.empty()) opts.output = out;
      if (!opts.output && cfg.output.empty()) opts.output = cfg.name + ".jsonl";
      const auto records = run_experiment(cfg, opts);
      for (const auto& r : records) {
        if (r.ok()) {
          std::printf("T=%-10.6g p=%-4d n=%-6s %s mli=%.4f fidelity=%.12f%s\n", r.total_time, r.depth,
                      format_n(r.n).c_str(), to_string(r.gate).c_str(), r.mli, r.fidelity,
                      r.refined_mli ? (" refined_mli=" + std::to_string(*r.refined_mli)).c_str() : "");
        }
      }
      if (!curves_out.empty()) emit_curves(records, CurveFormat::csv, curves_out);
      print_summary(records);
      return report_errors(records);
    }

    if (*refine) {
      auto records = load_records(records_path);
      for (auto& r : records) {
        if (!r.ok()) continue;
        try {
          r = refine_record(r, gc);
          std::printf("point %d: mli %.4f -> %.4f\n", r.point_index, r.mli, *r.refined_mli);
        } catch (const std::exception& e) {
          r.error = "refine point " + std::to_string(r.point_index) + ": " + e.what();
        }
      }
      write_records_jsonl(records, out);
      return report_errors(records);
    }

    if (*baseline) {
      const ExperimentConfig cfg = load_experiment_config(config);
      Sink sink(out);
      auto& os = sink.os();
      os.precision(17);
      if (dynamics) {
        std::vector<double> grid;
        for (int i = 0; i <= steps; ++i) grid.push_back(t_max * i / steps);
        os << "t,n,population\n";
        for (const auto& n : cfg.n_values) {
          const SpinSystemSpec spec = build_point_spec(cfg.model, n);
          std::vector<double> units = grid;
          if (in_ns) {
            for (double& t : units) t = ns_to_units(t);
          }
          const auto pop = reduced_dynamics_no_control(spec, units);
          for (std::size_t i = 0; i < grid.size(); ++i) os << grid[i] << "," << format_n(n) << "," << pop[i] << "\n";
        }
        return 0;
      }
      os << "T,n,gate,mli,fidelity\n";
      for (const auto& n : cfg.n_values) {
        const SpinSystemSpec spec = build_point_spec(cfg.model, n);
        const TargetGate target = build_target(cfg.gate, spec.n_qubits);
        for (double t : cfg.t_values) {
          const auto rep = no_control_baseline(spec, target, t);
          os << t << "," << format_n(n) << "," << to_string(cfg.gate) << "," << rep.mli << "," << rep.fidelity << "\n";
        }
      }
      return 0;
    }

    if (*control) {
      const auto specs = standard_table_specs();
      const auto rows = controllability_table(specs);
      json j = json::array();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        j.push_back({{"coupling", to_string(r.coupling)},
                     {"frame", to_string(r.frame)},
                     {"equal_couplings", r.equal_couplings},
                     {"couplings", specs[i].couplings},
                     {"algebra_dimension", r.algebra_dimension},
                     {"qubit_controllable", r.qubit_controllable},
                     {"bath_controllable", r.bath_controllable}});
      }
      json dets = json::array();
      for (auto scheme : {RecursionScheme::iso_lab, RecursionScheme::dipole_rotating, RecursionScheme::dipole_lab}) {
        for (auto gh : {std::pair{1.3, 1.3}, std::pair{1.3, 1.7}}) {
          const RecursionTable t = build_recursion_table(scheme, gh.first, gh.second, 1.1, 8);
          std::vector<int> orders;
          for (int s = 1; s <= t.width(); ++s) orders.push_back(s);
          const double det = recursion_determinant(t, orders);
          dets.push_back({{"scheme", to_string(scheme)}, {"g", gh.first}, {"h", gh.second}, {"eps", 1.1},
                          {"determinant", det}, {"zero", std::abs(det) < kDeterminantZeroThreshold}});
        }
      }
      if (!out.empty()) {
        Sink sink(out);
        sink.os() << json{{"table", j}, {"recursion", dets}}.dump(1) << "\n";
        return 0;
      }
      std::printf("%-10s %-9s %-9s %4s %-6s %-6s\n", "coupling", "frame", "couplings", "dim", "qubit", "bath");
      for (const auto& r : j) {
        std::printf("%-10s %-9s %-9s %4d %-6s %-6s\n", r["coupling"].get<std::string>().c_str(),
                    r["frame"].get<std::string>().c_str(), r["equal_couplings"].get<bool>() ? "equal" : "variable",
                    r["algebra_dimension"].get<int>(), r["qubit_controllable"].get<bool>() ? "Y" : "N",
                    r["bath_controllable"].get<bool>() ? "Y" : "N");
      }
      for (const auto& d : dets) {
        std::printf("%-16s g=%.2f h=%.2f det=% .3e%s\n", d["scheme"].get<std::string>().c_str(), d["g"].get<double>(),
                    d["h"].get<double>(), d["determinant"].get<double>(), d["zero"].get<bool>() ? " (zero)" : "");
      }
      return 0;
    }

    if (*landscape) {
      auto records = load_records(records_path);
      Sink sink(out);
      int failed = 0;
      for (const auto& r : records) {
        if (!r.ok()) continue;
        try {
          if (r.fidelity_kind != FidelityKind::unitary) throw InvalidArgument("landscape needs unitary records");
          const SwitchingAnsatz ansatz = build_switching_ansatz(r.spec, r.ansatz);
          const auto d = landscape_diagnostics(ansatz, SwitchingProtocol::from_durations(r.durations, static_cast<int>(ansatz.size())),
                                               build_target(r.gate, r.spec.n_qubits));
          sink.os() << json{{"point_index", r.point_index}, {"T", r.total_time},  {"p", r.depth},
                            {"fidelity", d.fidelity},       {"grad_inf_norm", d.grad_inf_norm},
                            {"n_positive", d.n_positive},   {"n_negative", d.n_negative},
                            {"n_zero", d.n_zero},           {"hessian_eigenvalues", d.hessian_eigenvalues}}
                           .dump()
                    << "\n";
        } catch (const std::exception& e) {
          std::cerr << "error: landscape point " << r.point_index << ": " << e.what() << "\n";
          ++failed;
        }
      }
      return failed ? kExitPartial : 0;
    }

    if (*curves) {
      const auto records = load_records(records_path);
      emit_curves(records, parse_curve_format(format), out);
      print_summary(records);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
