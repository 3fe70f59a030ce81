#pragma once

// Declarative sweeps: TOML experiment configs, JSON-lines result records,
// critical-point estimation and curve emission.

#include "hswitch/fidelity.hpp"
#include "hswitch/model.hpp"
#include "hswitch/optimize.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hswitch {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kRecordSchemaVersion = 1;

enum class TimeUnit { units, ns };

struct ModelConfig {
  // Preset name, or empty for an explicit model.
  std::string preset;
  // Explicit model; bath_counts and the per-spin lists are filled per sweep
  // point from the n axis.
  SpinSystemSpec base;
  // Explicit models: couplings are `couplings` verbatim, a constant, or
  // sampled uniformly from a range with coupling_seed.
  std::vector<double> couplings;
  std::optional<double> coupling_value;
  std::optional<std::pair<double, double>> coupling_range;
  // Explicit lab-frame models: Delta_q = 1 + step * q unless listed.
  std::vector<double> bath_splittings;
  double bath_splitting_step = 0.1;
  std::uint64_t coupling_seed = 0;
  // Overrides applied on top of presets.
  std::optional<double> qubit_qubit_coupling;
  std::optional<double> control_strength_x;
  std::optional<double> control_strength_y;
  std::optional<double> t1_system;
  std::optional<double> t1_tls;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name = "experiment";
  ModelConfig model;
  GateName gate = GateName::Z;
  AnsatzVariant ansatz = AnsatzVariant::two_ham_x;
  FidelityKind fidelity_kind = FidelityKind::unitary;
  LindbladMethod lindblad_method = LindbladMethod::automatic;
  // Sweep axes; times in simulation units after loading.
  std::vector<double> t_values;
  std::vector<int> p_values;
  std::vector<std::vector<int>> n_values;
  PGConfig optimizer;
  std::optional<GrapeConfig> grape;
  // Haar samples for the state-fidelity audit (0 disables it).
  int state_samples = 100;
  std::uint64_t seed = 0;
  std::string output;
  int jobs = 1;

  void validate() const;
};

// Parses a TOML document. Unknown keys and schema mismatches throw ConfigError.
ExperimentConfig parse_experiment_config(const std::string& toml_text, const std::string& source = "<string>");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Model for one sweep point.
SpinSystemSpec build_point_spec(const ModelConfig& model, const std::vector<int>& bath_counts);

struct ResultRecord {
  int schema_version = kRecordSchemaVersion;
  std::string name;
  int point_index = 0;
  SpinSystemSpec spec;
  GateName gate = GateName::Z;
  AnsatzVariant ansatz = AnsatzVariant::two_ham_x;
  FidelityKind fidelity_kind = FidelityKind::unitary;
  LindbladMethod lindblad_method = LindbladMethod::automatic;
  double total_time = 0.0;
  int depth = 0;
  std::vector<int> n;
  double fidelity = 0.0;
  double mli = 0.0;
  std::vector<double> durations;
  std::vector<double> restart_fidelities;
  int restart_best_index = 0;
  std::vector<std::uint64_t> restart_seeds;
  std::uint64_t master_seed = 0;
  std::uint64_t point_seed = 0;
  std::optional<double> state_fid_mean;
  std::optional<double> state_fid_std;
  int state_samples = 0;
  std::vector<double> amplitudes;
  std::optional<double> refined_fidelity;
  std::optional<double> refined_mli;
  std::optional<std::string> error;
  // Not serialized into the record (kept out so result files are byte-stable).
  double wall_time_s = 0.0;

  bool ok() const { return !error.has_value(); }
};

nlohmann::json to_json(const SpinSystemSpec& spec);
SpinSystemSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ResultRecord& r);
ResultRecord record_from_json(const nlohmann::json& j);

// Fidelity of the stored protocol, recomputed from the stored model.
double reevaluate(const ResultRecord& r);

struct RunOptions {
  // Overrides for the config values when set.
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<int> restarts;
  std::optional<std::string> output;
};

// One record per (n, p, T) point, in that nesting order. A failing point
// yields a record with `error` set and does not stop the sweep.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

// GRAPE pass over stored records (two-Hamiltonian ansatze only).
ResultRecord refine_record(const ResultRecord& r, const GrapeConfig& cfg = {});

void write_records_jsonl(const std::vector<ResultRecord>& records, const std::filesystem::path& path);
std::vector<ResultRecord> read_records_jsonl(const std::filesystem::path& path);
// Wall-clock timings, one JSON object per record, kept beside the results.
void write_timings_jsonl(const std::vector<ResultRecord>& records, const std::filesystem::path& path);

struct CriticalPointOptions {
  double plateau_band = 0.5;
  double jump = 2.0;
};

struct CriticalPoints {
  std::vector<int> n;
  GateName gate = GateName::Z;
  // Estimated from the largest swept depth.
  double t_star = 0.0;
  // T* sits on the last grid point: no plateau was resolved.
  bool t_star_at_boundary = false;
  std::optional<int> p_star;
  double plateau_mli = 0.0;
};

struct SweepSummary {
  std::vector<CriticalPoints> groups;
};

// Groups successful records by (n, gate). Throws InvalidArgument when a
// group has fewer than two T values.
SweepSummary estimate_critical_points(const std::vector<ResultRecord>& records, const CriticalPointOptions& opts = {});

enum class CurveFormat { csv, json };

inline constexpr const char* kCurveCsvHeader = "T,p,n,gate,mli,fidelity,state_fid_mean,state_fid_std,restart_best_index";

// CSV rows sorted by (gate, n, p, T); JSON is the full record array.
void emit_curves(const std::vector<ResultRecord>& records, CurveFormat format, const std::filesystem::path& path);
std::string curves_csv(const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_records_json(const std::filesystem::path& path);

std::string format_n(const std::vector<int>& n);
TimeUnit parse_time_unit(std::string_view s);
CurveFormat parse_curve_format(std::string_view s);

}  // namespace hswitch
