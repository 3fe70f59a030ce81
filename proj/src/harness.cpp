#include "hswitch/harness.hpp"

#include "hswitch/errors.hpp"

#include <toml.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace hswitch {

namespace {

using json = nlohmann::json;

void check_keys(const toml::table& t, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [k, v] : t) {
    const std::string_view key = k.str();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
    }
  }
}

std::string where_of(const std::string& source, const std::string& table, std::string_view key) {
  return source + ": " + (table.empty() ? "" : "[" + table + "] ") + std::string(key);
}

double get_double(const toml::node& n, const std::string& where) {
  if (auto v = n.value_exact<double>()) return *v;
  if (auto v = n.value_exact<std::int64_t>()) return static_cast<double>(*v);
  throw ConfigError(where + ": expected a number");
}

std::int64_t get_int(const toml::node& n, const std::string& where) {
  if (auto v = n.value_exact<std::int64_t>()) return *v;
  throw ConfigError(where + ": expected an integer");
}

bool get_bool(const toml::node& n, const std::string& where) {
  if (auto v = n.value_exact<bool>()) return *v;
  throw ConfigError(where + ": expected a boolean");
}

std::string get_string(const toml::node& n, const std::string& where) {
  if (auto v = n.value_exact<std::string>()) return *v;
  throw ConfigError(where + ": expected a string");
}

const toml::array& get_array(const toml::node& n, const std::string& where) {
  const auto* a = n.as_array();
  if (!a) throw ConfigError(where + ": expected an array");
  return *a;
}

std::vector<double> get_doubles(const toml::node& n, const std::string& where) {
  std::vector<double> out;
  for (const auto& e : get_array(n, where)) out.push_back(get_double(e, where));
  return out;
}

std::uint64_t get_seed(const toml::node& n, const std::string& where) {
  const auto v = get_int(n, where);
  if (v < 0) throw ConfigError(where + ": seeds are non-negative");
  return static_cast<std::uint64_t>(v);
}

template <class F>
auto rethrow_as_config(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void parse_model(const toml::table& t, const std::string& src, double time_scale, ModelConfig& m) {
  check_keys(t,
             {"preset", "coupling_seed", "qubit_qubit_coupling", "control_strength_x", "control_strength_y",
              "t1_system", "t1_tls", "n_qubits", "coupling", "frame", "qubit_splittings", "couplings",
              "coupling_value", "coupling_range", "bath_splittings", "bath_splitting_step"},
             src + ": [model]");
  auto w = [&](std::string_view k) { return where_of(src, "model", k); };
  for (const auto& [k, v] : t) {
    const std::string_view key = k.str();
    if (key == "preset") {
      m.preset = get_string(v, w(key));
    } else if (key == "coupling_seed") {
      m.coupling_seed = get_seed(v, w(key));
    } else if (key == "qubit_qubit_coupling") {
      m.qubit_qubit_coupling = get_double(v, w(key));
    } else if (key == "control_strength_x") {
      m.control_strength_x = get_double(v, w(key));
    } else if (key == "control_strength_y") {
      m.control_strength_y = get_double(v, w(key));
    } else if (key == "t1_system") {
      m.t1_system = get_double(v, w(key)) * time_scale;
    } else if (key == "t1_tls") {
      m.t1_tls = get_double(v, w(key)) * time_scale;
    } else if (key == "n_qubits") {
      m.base.n_qubits = static_cast<int>(get_int(v, w(key)));
    } else if (key == "coupling") {
      m.base.coupling_kind = rethrow_as_config(w(key), [&] { return parse_coupling_kind(get_string(v, w(key))); });
    } else if (key == "frame") {
      m.base.frame = rethrow_as_config(w(key), [&] { return parse_frame(get_string(v, w(key))); });
    } else if (key == "qubit_splittings") {
      m.base.qubit_splittings = get_doubles(v, w(key));
    } else if (key == "couplings") {
      m.couplings = get_doubles(v, w(key));
    } else if (key == "coupling_value") {
      m.coupling_value = get_double(v, w(key));
    } else if (key == "coupling_range") {
      const auto r = get_doubles(v, w(key));
      if (r.size() != 2 || !(r[0] <= r[1])) throw ConfigError(w(key) + ": expected [low, high]");
      m.coupling_range = std::make_pair(r[0], r[1]);
    } else if (key == "bath_splittings") {
      m.bath_splittings = get_doubles(v, w(key));
    } else if (key == "bath_splitting_step") {
      m.bath_splitting_step = get_double(v, w(key));
    }
  }
  const bool explicit_keys = t.contains("n_qubits") || t.contains("coupling") || t.contains("frame") ||
                             t.contains("qubit_splittings") || t.contains("couplings") ||
                             t.contains("coupling_value") || t.contains("coupling_range") ||
                             t.contains("bath_splittings") || t.contains("bath_splitting_step");
  if (!m.preset.empty() && explicit_keys) {
    throw ConfigError(src + ": [model] mixes a preset with explicit model keys");
  }
  if (m.preset.empty()) {
    const int sources = static_cast<int>(!m.couplings.empty()) + static_cast<int>(m.coupling_value.has_value()) +
                        static_cast<int>(m.coupling_range.has_value());
    if (sources != 1) {
      throw ConfigError(src + ": [model] needs exactly one of couplings, coupling_value, coupling_range");
    }
    if (static_cast<int>(m.base.qubit_splittings.size()) != m.base.n_qubits) {
      m.base.qubit_splittings.assign(static_cast<std::size_t>(m.base.n_qubits), 1.0);
    }
  }
}

}  // namespace

TimeUnit parse_time_unit(std::string_view s) {
  if (s == "units") return TimeUnit::units;
  if (s == "ns") return TimeUnit::ns;
  throw InvalidArgument("unknown time unit '" + std::string(s) + "' (expected units or ns)");
}

CurveFormat parse_curve_format(std::string_view s) {
  if (s == "csv") return CurveFormat::csv;
  if (s == "json") return CurveFormat::json;
  throw InvalidArgument("unknown curve format '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
  }
  if (t_values.empty() || p_values.empty() || n_values.empty()) throw ConfigError("sweep lists must be non-empty");
  for (double t : t_values) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("sweep T values must be positive");
  }
  for (int p : p_values) {
    if (p < 1) throw ConfigError("sweep p values must be at least 1");
  }
  for (const auto& n : n_values) {
    if (n.empty()) throw ConfigError("sweep n entries must be non-empty");
    for (int c : n) {
      if (c < 0) throw ConfigError("sweep n values must be non-negative");
    }
  }
  if (gate == GateName::custom) throw ConfigError("custom gates cannot be declared in a config");
  if (fidelity_kind == FidelityKind::avg_state) {
    throw ConfigError("fidelity_kind avg_state is an audit, not an objective");
  }
  if (state_samples < 0) throw ConfigError("state_samples must be non-negative");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  rethrow_as_config("optimizer", [&] {
    optimizer.validate();
    return 0;
  });
  if (grape) {
    rethrow_as_config("grape", [&] {
      grape->validate();
      return 0;
    });
  }
  rethrow_as_config("model", [&] {
    build_point_spec(model, n_values.front()).validate();
    return 0;
  });
}

ExperimentConfig parse_experiment_config(const std::string& toml_text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(os.str());
  }
  check_keys(root,
             {"schema_version", "name", "seed", "output", "unit", "gate", "ansatz", "fidelity_kind",
              "lindblad_method", "state_samples", "jobs", "model", "sweep", "optimizer", "grape"},
             source);
  ExperimentConfig cfg;
  auto w = [&](std::string_view k) { return where_of(source, "", k); };

  const auto* version = root.get("schema_version");
  if (!version) throw ConfigError(source + ": missing schema_version");
  cfg.schema_version = static_cast<int>(get_int(*version, w("schema_version")));
  if (cfg.schema_version != kConfigSchemaVersion) {
    throw ConfigError(source + ": unsupported schema_version " + std::to_string(cfg.schema_version));
  }
  const auto* seed = root.get("seed");
  if (!seed) throw ConfigError(source + ": missing seed");
  cfg.seed = get_seed(*seed, w("seed"));

  TimeUnit unit = TimeUnit::units;
  if (const auto* n = root.get("unit")) {
    unit = rethrow_as_config(w("unit"), [&] { return parse_time_unit(get_string(*n, w("unit"))); });
  }
  const double time_scale = unit == TimeUnit::ns ? ns_to_units(1.0) : 1.0;

  if (const auto* n = root.get("name")) cfg.name = get_string(*n, w("name"));
  if (const auto* n = root.get("output")) cfg.output = get_string(*n, w("output"));
  if (const auto* n = root.get("gate")) {
    cfg.gate = rethrow_as_config(w("gate"), [&] { return parse_gate_name(get_string(*n, w("gate"))); });
  }
  if (const auto* n = root.get("ansatz")) {
    cfg.ansatz = rethrow_as_config(w("ansatz"), [&] { return parse_ansatz_variant(get_string(*n, w("ansatz"))); });
  }
  if (const auto* n = root.get("fidelity_kind")) {
    cfg.fidelity_kind =
        rethrow_as_config(w("fidelity_kind"), [&] { return parse_fidelity_kind(get_string(*n, w("fidelity_kind"))); });
  }
  if (const auto* n = root.get("lindblad_method")) {
    cfg.lindblad_method = rethrow_as_config(
        w("lindblad_method"), [&] { return parse_lindblad_method(get_string(*n, w("lindblad_method"))); });
  }
  if (const auto* n = root.get("state_samples")) {
    cfg.state_samples = static_cast<int>(get_int(*n, w("state_samples")));
  }
  if (const auto* n = root.get("jobs")) cfg.jobs = static_cast<int>(get_int(*n, w("jobs")));

  const auto* model = root.get_as<toml::table>("model");
  if (!model) throw ConfigError(source + ": missing [model] table");
  parse_model(*model, source, time_scale, cfg.model);

  const auto* sweep = root.get_as<toml::table>("sweep");
  if (!sweep) throw ConfigError(source + ": missing [sweep] table");
  check_keys(*sweep, {"T", "p", "n"}, source + ": [sweep]");
  auto ws = [&](std::string_view k) { return where_of(source, "sweep", k); };
  if (const auto* n = sweep->get("T")) {
    for (double t : get_doubles(*n, ws("T"))) cfg.t_values.push_back(t * time_scale);
  }
  if (const auto* n = sweep->get("p")) {
    for (const auto& e : get_array(*n, ws("p"))) cfg.p_values.push_back(static_cast<int>(get_int(e, ws("p"))));
  }
  if (const auto* n = sweep->get("n")) {
    for (const auto& e : get_array(*n, ws("n"))) {
      if (e.is_array()) {
        std::vector<int> counts;
        for (const auto& c : *e.as_array()) counts.push_back(static_cast<int>(get_int(c, ws("n"))));
        cfg.n_values.push_back(counts);
      } else {
        cfg.n_values.push_back({static_cast<int>(get_int(e, ws("n")))});
      }
    }
  }

  if (const auto* opt = root.get_as<toml::table>("optimizer")) {
    check_keys(*opt,
               {"iterations", "batch_size", "restarts", "lr_mean", "lr_logstd", "init_std_fraction",
                "init_mean_jitter", "antithetic"},
               source + ": [optimizer]");
    auto wo = [&](std::string_view k) { return where_of(source, "optimizer", k); };
    auto& o = cfg.optimizer;
    if (const auto* n = opt->get("iterations")) o.iterations = static_cast<int>(get_int(*n, wo("iterations")));
    if (const auto* n = opt->get("batch_size")) o.batch_size = static_cast<int>(get_int(*n, wo("batch_size")));
    if (const auto* n = opt->get("restarts")) o.restarts = static_cast<int>(get_int(*n, wo("restarts")));
    if (const auto* n = opt->get("lr_mean")) o.lr_mean = get_double(*n, wo("lr_mean"));
    if (const auto* n = opt->get("lr_logstd")) o.lr_logstd = get_double(*n, wo("lr_logstd"));
    if (const auto* n = opt->get("init_std_fraction")) o.init_std_fraction = get_double(*n, wo("init_std_fraction"));
    if (const auto* n = opt->get("init_mean_jitter")) o.init_mean_jitter = get_double(*n, wo("init_mean_jitter"));
    if (const auto* n = opt->get("antithetic")) o.antithetic = get_bool(*n, wo("antithetic"));
  } else if (root.contains("optimizer")) {
    throw ConfigError(source + ": optimizer must be a table");
  }

  if (const auto* g = root.get_as<toml::table>("grape")) {
    check_keys(*g,
               {"enabled", "lower", "upper", "max_iterations", "gradient_tolerance", "check_tolerance",
                "check_gradient"},
               source + ": [grape]");
    auto wg = [&](std::string_view k) { return where_of(source, "grape", k); };
    GrapeConfig gc;
    bool enabled = true;
    if (const auto* n = g->get("enabled")) enabled = get_bool(*n, wg("enabled"));
    if (const auto* n = g->get("lower")) gc.lower = get_double(*n, wg("lower"));
    if (const auto* n = g->get("upper")) gc.upper = get_double(*n, wg("upper"));
    if (const auto* n = g->get("max_iterations")) gc.max_iterations = static_cast<int>(get_int(*n, wg("max_iterations")));
    if (const auto* n = g->get("gradient_tolerance")) gc.gradient_tolerance = get_double(*n, wg("gradient_tolerance"));
    if (const auto* n = g->get("check_tolerance")) gc.check_tolerance = get_double(*n, wg("check_tolerance"));
    if (const auto* n = g->get("check_gradient")) gc.check_gradient = get_bool(*n, wg("check_gradient"));
    if (enabled) cfg.grape = gc;
  } else if (root.contains("grape")) {
    throw ConfigError(source + ": grape must be a table");
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_experiment_config(os.str(), path.string());
}

SpinSystemSpec build_point_spec(const ModelConfig& m, const std::vector<int>& bath_counts) {
  SpinSystemSpec s;
  if (!m.preset.empty()) {
    PresetOptions opts;
    opts.bath_counts = bath_counts;
    opts.seed = m.coupling_seed;
    s = standard_parameter_presets(m.preset, opts);
  } else {
    s = m.base;
    s.bath_counts = bath_counts;
    const int nb = s.total_bath();
    if (!m.couplings.empty()) {
      if (static_cast<int>(m.couplings.size()) != nb) {
        throw InvalidArgument("explicit couplings list has " + std::to_string(m.couplings.size()) +
                              " entries for " + std::to_string(nb) + " bath spins");
      }
      s.couplings = m.couplings;
    } else if (m.coupling_value) {
      s.couplings.assign(static_cast<std::size_t>(nb), *m.coupling_value);
    } else if (m.coupling_range) {
      std::mt19937_64 rng(m.coupling_seed);
      std::uniform_real_distribution<double> u(m.coupling_range->first, m.coupling_range->second);
      s.couplings.clear();
      for (int i = 0; i < nb; ++i) s.couplings.push_back(u(rng));
      s.coupling_seed = m.coupling_seed;
    }
    s.bath_splittings.clear();
    if (s.frame == Frame::lab) {
      if (!m.bath_splittings.empty()) {
        if (static_cast<int>(m.bath_splittings.size()) != nb) {
          throw InvalidArgument("explicit bath_splittings list does not match the bath size");
        }
        s.bath_splittings = m.bath_splittings;
      } else {
        for (int q = 1; q <= nb; ++q) s.bath_splittings.push_back(1.0 + m.bath_splitting_step * q);
      }
    }
  }
  if (m.qubit_qubit_coupling) s.qubit_qubit_coupling = *m.qubit_qubit_coupling;
  if (m.control_strength_x) s.control_strength_x = m.control_strength_x;
  if (m.control_strength_y) s.control_strength_y = m.control_strength_y;
  if (m.t1_system) s.t1_system = m.t1_system;
  if (m.t1_tls) s.t1_tls = m.t1_tls;
  s.validate();
  return s;
}

namespace {

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> json_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

json to_json(const SpinSystemSpec& s) {
  return json{{"n_qubits", s.n_qubits},
              {"bath_counts", s.bath_counts},
              {"coupling", to_string(s.coupling_kind)},
              {"frame", to_string(s.frame)},
              {"qubit_splittings", s.qubit_splittings},
              {"bath_splittings", s.bath_splittings},
              {"couplings", s.couplings},
              {"qubit_qubit_coupling", s.qubit_qubit_coupling},
              {"control_strength_x", opt_json(s.control_strength_x)},
              {"control_strength_y", opt_json(s.control_strength_y)},
              {"t1_system", opt_json(s.t1_system)},
              {"t1_tls", opt_json(s.t1_tls)},
              {"coupling_seed", opt_json(s.coupling_seed)}};
}

SpinSystemSpec spec_from_json(const json& j) {
  SpinSystemSpec s;
  s.n_qubits = j.at("n_qubits").get<int>();
  s.bath_counts = j.at("bath_counts").get<std::vector<int>>();
  s.coupling_kind = parse_coupling_kind(j.at("coupling").get<std::string>());
  s.frame = parse_frame(j.at("frame").get<std::string>());
  s.qubit_splittings = j.at("qubit_splittings").get<std::vector<double>>();
  s.bath_splittings = j.at("bath_splittings").get<std::vector<double>>();
  s.couplings = j.at("couplings").get<std::vector<double>>();
  s.qubit_qubit_coupling = j.at("qubit_qubit_coupling").get<double>();
  s.control_strength_x = json_opt<double>(j, "control_strength_x");
  s.control_strength_y = json_opt<double>(j, "control_strength_y");
  s.t1_system = json_opt<double>(j, "t1_system");
  s.t1_tls = json_opt<double>(j, "t1_tls");
  s.coupling_seed = json_opt<std::uint64_t>(j, "coupling_seed");
  return s;
}

json to_json(const ResultRecord& r) {
  return json{{"schema_version", r.schema_version},
              {"name", r.name},
              {"point_index", r.point_index},
              {"model", to_json(r.spec)},
              {"gate", to_string(r.gate)},
              {"ansatz", to_string(r.ansatz)},
              {"fidelity_kind", to_string(r.fidelity_kind)},
              {"lindblad_method", to_string(r.lindblad_method)},
              {"T", r.total_time},
              {"p", r.depth},
              {"n", r.n},
              {"fidelity", r.fidelity},
              {"mli", r.mli},
              {"durations", r.durations},
              {"restart_fidelities", r.restart_fidelities},
              {"restart_best_index", r.restart_best_index},
              {"seeds", {{"master", r.master_seed}, {"point", r.point_seed}, {"restarts", r.restart_seeds}}},
              {"state_fid_mean", opt_json(r.state_fid_mean)},
              {"state_fid_std", opt_json(r.state_fid_std)},
              {"state_samples", r.state_samples},
              {"amplitudes", r.amplitudes},
              {"refined_fidelity", opt_json(r.refined_fidelity)},
              {"refined_mli", opt_json(r.refined_mli)},
              {"error", opt_json(r.error)}};
}

ResultRecord record_from_json(const json& j) {
  ResultRecord r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kRecordSchemaVersion) {
    throw ConfigError("unsupported record schema_version " + std::to_string(r.schema_version));
  }
  r.name = j.at("name").get<std::string>();
  r.point_index = j.at("point_index").get<int>();
  r.spec = spec_from_json(j.at("model"));
  r.gate = parse_gate_name(j.at("gate").get<std::string>());
  r.ansatz = parse_ansatz_variant(j.at("ansatz").get<std::string>());
  r.fidelity_kind = parse_fidelity_kind(j.at("fidelity_kind").get<std::string>());
  r.lindblad_method = parse_lindblad_method(j.at("lindblad_method").get<std::string>());
  r.total_time = j.at("T").get<double>();
  r.depth = j.at("p").get<int>();
  r.n = j.at("n").get<std::vector<int>>();
  r.fidelity = j.at("fidelity").get<double>();
  r.mli = j.at("mli").get<double>();
  r.durations = j.at("durations").get<std::vector<double>>();
  r.restart_fidelities = j.at("restart_fidelities").get<std::vector<double>>();
  r.restart_best_index = j.at("restart_best_index").get<int>();
  const auto& seeds = j.at("seeds");
  r.master_seed = seeds.at("master").get<std::uint64_t>();
  r.point_seed = seeds.at("point").get<std::uint64_t>();
  r.restart_seeds = seeds.at("restarts").get<std::vector<std::uint64_t>>();
  r.state_fid_mean = json_opt<double>(j, "state_fid_mean");
  r.state_fid_std = json_opt<double>(j, "state_fid_std");
  r.state_samples = j.at("state_samples").get<int>();
  r.amplitudes = j.at("amplitudes").get<std::vector<double>>();
  r.refined_fidelity = json_opt<double>(j, "refined_fidelity");
  r.refined_mli = json_opt<double>(j, "refined_mli");
  r.error = json_opt<std::string>(j, "error");
  if (r.ok()) {
    const SwitchingAnsatz ansatz = build_switching_ansatz(r.spec, r.ansatz);
    const int k = static_cast<int>(ansatz.size());
    const auto protocol = SwitchingProtocol::from_durations(r.durations, k);
    protocol.validate(k);
    if (protocol.depth != r.depth) throw ConfigError("record depth does not match its durations");
    if (std::abs(protocol.total_time - r.total_time) > 1e-9 * std::max(1.0, r.total_time)) {
      throw ConfigError("record durations do not sum to T");
    }
    for (double d : r.durations) {
      if (d < 0.0) throw ConfigError("record has a negative duration");
    }
  }
  return r;
}

namespace {

ProtocolObjective point_objective(const SpinSystemSpec& spec, const SwitchingAnsatz& ansatz, const TargetGate& target,
                                  FidelityKind kind, LindbladMethod method) {
  if (kind == FidelityKind::ref_state) {
    return make_ref_state_objective(ansatz, target, build_lindblad_operators(spec), method);
  }
  return make_unitary_objective(ansatz, target);
}

std::string point_label(const ResultRecord& r) {
  std::ostringstream os;
  os.precision(17);
  os << "point " << r.point_index << " (T=" << r.total_time << ", p=" << r.depth << ", n=" << format_n(r.n) << ")";
  return os.str();
}

void refine_into(ResultRecord& r, const SwitchingAnsatz& ansatz, const TargetGate& target, const GrapeConfig& gc) {
  const auto protocol = SwitchingProtocol::from_durations(r.durations, static_cast<int>(ansatz.size()));
  const GrapeResult g = grape_refine(ansatz, protocol, target, gc);
  r.amplitudes = g.amplitudes.amplitudes;
  const double again = amplitude_fidelity(ansatz, target, r.amplitudes, r.durations);
  if (std::abs(again - g.report.fidelity) > 1e-12) {
    throw Error("refined amplitudes re-evaluate to " + std::to_string(again) + ", stored " +
                std::to_string(g.report.fidelity));
  }
  r.refined_fidelity = g.report.fidelity;
  r.refined_mli = g.report.mli;
}

void run_point(ResultRecord& r, const ExperimentConfig& cfg, int restarts, int pg_jobs) {
  const SwitchingAnsatz ansatz = build_switching_ansatz(r.spec, r.ansatz);
  const TargetGate target = build_target(r.gate, r.spec.n_qubits);
  const auto objective = point_objective(r.spec, ansatz, target, r.fidelity_kind, r.lindblad_method);

  PGConfig pg = cfg.optimizer;
  pg.depth = r.depth;
  pg.total_time = r.total_time;
  pg.seed = r.point_seed;
  pg.restarts = restarts;
  pg.jobs = pg_jobs;
  const PGResult res = pg_optimize(objective, static_cast<int>(ansatz.size()), pg, r.fidelity_kind);

  r.durations = res.protocol.durations;
  r.fidelity = res.report.fidelity;
  r.mli = res.report.mli;
  r.restart_best_index = res.best_restart;
  for (const auto& rr : res.restarts) {
    r.restart_fidelities.push_back(rr.fidelity);
    r.restart_seeds.push_back(rr.seed);
  }

  // Round trip through the serialized form.
  const ResultRecord back = record_from_json(json::parse(to_json(r).dump()));
  const double again = reevaluate(back);
  if (std::abs(again - r.fidelity) > 1e-12) {
    throw Error("stored protocol re-evaluates to " + std::to_string(again) + ", stored " +
                std::to_string(r.fidelity));
  }

  if (r.fidelity_kind == FidelityKind::unitary && cfg.state_samples > 0) {
    const auto u = propagate_switching(ansatz, res.protocol).final_operator;
    const auto audit =
        average_state_fidelity(u, target, ansatz.n_system_sites, cfg.state_samples, split_seed(r.point_seed, 1u << 20));
    r.state_fid_mean = audit.state_fid_mean;
    r.state_fid_std = audit.state_fid_std;
    r.state_samples = cfg.state_samples;
  }
  if (cfg.grape) refine_into(r, ansatz, target, *cfg.grape);
}

}  // namespace

double reevaluate(const ResultRecord& r) {
  const SwitchingAnsatz ansatz = build_switching_ansatz(r.spec, r.ansatz);
  const TargetGate target = build_target(r.gate, r.spec.n_qubits);
  const auto protocol = SwitchingProtocol::from_durations(r.durations, static_cast<int>(ansatz.size()));
  protocol.validate(static_cast<int>(ansatz.size()));
  return point_objective(r.spec, ansatz, target, r.fidelity_kind, r.lindblad_method)(r.durations);
}

ResultRecord refine_record(const ResultRecord& r, const GrapeConfig& cfg) {
  if (!r.ok()) throw InvalidArgument("cannot refine a failed record");
  ResultRecord out = r;
  const SwitchingAnsatz ansatz = build_switching_ansatz(r.spec, r.ansatz);
  refine_into(out, ansatz, build_target(r.gate, r.spec.n_qubits), cfg);
  return out;
}

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg_in, const RunOptions& options) {
  ExperimentConfig cfg = cfg_in;
  if (options.seed) cfg.seed = *options.seed;
  if (options.jobs) cfg.jobs = *options.jobs;
  if (options.restarts) cfg.optimizer.restarts = *options.restarts;
  if (options.output) cfg.output = *options.output;
  cfg.validate();

  std::vector<ResultRecord> records;
  for (const auto& n : cfg.n_values) {
    for (int p : cfg.p_values) {
      for (double t : cfg.t_values) {
        ResultRecord r;
        r.name = cfg.name;
        r.point_index = static_cast<int>(records.size());
        r.gate = cfg.gate;
        r.ansatz = cfg.ansatz;
        r.fidelity_kind = cfg.fidelity_kind;
        r.lindblad_method = cfg.lindblad_method;
        r.total_time = t;
        r.depth = p;
        r.n = n;
        r.master_seed = cfg.seed;
        r.point_seed = split_seed(cfg.seed, static_cast<std::uint64_t>(r.point_index));
        records.push_back(std::move(r));
      }
    }
  }
  const int n_points = static_cast<int>(records.size());
  // Parallelism goes to the points; a single point spreads its restarts.
  const int point_jobs = std::min(cfg.jobs, n_points);
  const int pg_jobs = n_points == 1 ? cfg.jobs : 1;

  std::ofstream out;
  std::ofstream timing;
  if (!cfg.output.empty()) {
    const std::filesystem::path path(cfg.output);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out.open(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open output " + path.string());
    timing.open(path.string() + ".timing.jsonl", std::ios::binary | std::ios::trunc);
    if (!timing) throw Error("cannot open timing log " + path.string() + ".timing.jsonl");
  }

  std::vector<char> done(static_cast<std::size_t>(n_points), 0);
  int flushed = 0;
  std::mutex writer;
  auto finish = [&](int i) {
    std::lock_guard<std::mutex> lock(writer);
    done[static_cast<std::size_t>(i)] = 1;
    while (flushed < n_points && done[static_cast<std::size_t>(flushed)]) {
      const auto& r = records[static_cast<std::size_t>(flushed)];
      if (out.is_open()) {
        out << to_json(r).dump() << '\n';
        out.flush();
        timing << json{{"point_index", r.point_index}, {"wall_time_s", r.wall_time_s}}.dump() << '\n';
        if (!out || !timing) throw Error(point_label(r) + ": write to " + cfg.output + " failed");
      }
      ++flushed;
    }
  };

  std::atomic<int> next{0};
  std::exception_ptr io_failure;
  auto worker = [&]() {
    for (int i = next++; i < n_points; i = next++) {
      auto& r = records[static_cast<std::size_t>(i)];
      const auto start = std::chrono::steady_clock::now();
      try {
        r.spec = build_point_spec(cfg.model, r.n);
        run_point(r, cfg, cfg.optimizer.restarts, pg_jobs);
      } catch (const std::exception& e) {
        ResultRecord failed;
        failed.name = r.name;
        failed.point_index = r.point_index;
        failed.spec = r.spec;
        failed.gate = r.gate;
        failed.ansatz = r.ansatz;
        failed.fidelity_kind = r.fidelity_kind;
        failed.lindblad_method = r.lindblad_method;
        failed.total_time = r.total_time;
        failed.depth = r.depth;
        failed.n = r.n;
        failed.master_seed = r.master_seed;
        failed.point_seed = r.point_seed;
        failed.error = point_label(r) + ": " + e.what();
        r = std::move(failed);
      }
      r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      try {
        finish(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(writer);
        if (!io_failure) io_failure = std::current_exception();
      }
    }
  };
  if (point_jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < point_jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (io_failure) std::rethrow_exception(io_failure);
  return records;
}

void write_records_jsonl(const std::vector<ResultRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw Error("write to " + path.string() + " failed");
}

void write_timings_jsonl(const std::vector<ResultRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& r : records) {
    out << json{{"point_index", r.point_index}, {"wall_time_s", r.wall_time_s}}.dump() << '\n';
  }
  if (!out) throw Error("write to " + path.string() + " failed");
}

std::vector<ResultRecord> read_records_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<ResultRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ResultRecord> read_records_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<ResultRecord> out;
  try {
    const json j = json::parse(in);
    if (!j.is_array()) throw Error("expected a JSON array of records");
    for (const auto& e : j) out.push_back(record_from_json(e));
  } catch (const std::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return out;
}

std::string format_n(const std::vector<int>& n) {
  std::string s;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (i) s += '+';
    s += std::to_string(n[i]);
  }
  return s;
}

SweepSummary estimate_critical_points(const std::vector<ResultRecord>& records, const CriticalPointOptions& opts) {
  // (n, gate) -> p -> T -> best MLI
  std::map<std::pair<std::vector<int>, std::string>, std::map<int, std::map<double, double>>> groups;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    auto& cell = groups[{r.n, to_string(r.gate)}][r.depth];
    auto [it, inserted] = cell.emplace(r.total_time, r.mli);
    if (!inserted) it->second = std::max(it->second, r.mli);
  }
  if (groups.empty()) throw InvalidArgument("estimate_critical_points: no successful records");
  SweepSummary summary;
  for (const auto& [key, by_p] : groups) {
    CriticalPoints cp;
    cp.n = key.first;
    cp.gate = parse_gate_name(key.second);
    const auto& top = by_p.rbegin()->second;
    if (top.size() < 2) {
      throw InvalidArgument("estimate_critical_points: n=" + format_n(cp.n) + " " + key.second +
                            " needs at least two T values at p=" + std::to_string(by_p.rbegin()->first));
    }
    double best = -1.0;
    for (const auto& [t, m] : top) best = std::max(best, m);
    cp.plateau_mli = best;
    for (const auto& [t, m] : top) {
      if (m >= best - opts.plateau_band) {
        cp.t_star = t;
        break;
      }
    }
    cp.t_star_at_boundary = cp.t_star == top.rbegin()->first;
    if (by_p.size() >= 2) {
      double flat = -1.0;
      for (const auto& [t, m] : by_p.begin()->second) flat = std::max(flat, m);
      for (auto it = std::next(by_p.begin()); it != by_p.end(); ++it) {
        double peak = -1.0;
        for (const auto& [t, m] : it->second) peak = std::max(peak, m);
        if (peak > flat + opts.jump) {
          cp.p_star = it->first;
          break;
        }
      }
    }
    summary.groups.push_back(cp);
  }
  return summary;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

std::string curves_csv(const std::vector<ResultRecord>& records) {
  std::vector<const ResultRecord*> rows;
  for (const auto& r : records) {
    if (r.ok()) rows.push_back(&r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRecord* a, const ResultRecord* b) {
    const auto ka = std::make_tuple(to_string(a->gate), a->n, a->depth, a->total_time);
    const auto kb = std::make_tuple(to_string(b->gate), b->n, b->depth, b->total_time);
    return ka < kb;
  });
  std::string s = std::string(kCurveCsvHeader) + "\n";
  for (const auto* r : rows) {
    s += num(r->total_time) + "," + std::to_string(r->depth) + "," + format_n(r->n) + "," + to_string(r->gate) + "," +
         num(r->mli) + "," + num(r->fidelity) + "," + num(r->state_fid_mean) + "," + num(r->state_fid_std) + "," +
         std::to_string(r->restart_best_index) + "\n";
  }
  return s;
}

void emit_curves(const std::vector<ResultRecord>& records, CurveFormat format, const std::filesystem::path& path) {
  if (records.empty()) throw InvalidArgument("emit_curves: no records");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  if (format == CurveFormat::csv) {
    out << curves_csv(records);
  } else {
    json arr = json::array();
    for (const auto& r : records) arr.push_back(to_json(r));
    out << arr.dump(1) << '\n';
  }
  if (!out) throw Error("write to " + path.string() + " failed");
}

}  // namespace hswitch
