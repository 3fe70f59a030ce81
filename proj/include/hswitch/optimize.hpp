#pragma once

// Policy-gradient search over switching hold times, GRAPE refinement of
// piecewise-constant amplitudes, and finite-difference landscape diagnostics.

#include "hswitch/fidelity.hpp"
#include "hswitch/model.hpp"
#include "hswitch/propagate.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace hswitch {

// Fidelity as a function of hold times. Must be safe to call concurrently.
using ProtocolObjective = std::function<double(std::span<const double>)>;

ProtocolObjective make_unitary_objective(const SwitchingAnsatz& ansatz, const TargetGate& target);

// Reference-state fidelity under Lindblad dynamics, bath starting in |0...0>.
ProtocolObjective make_ref_state_objective(const SwitchingAnsatz& ansatz, const TargetGate& target,
                                           const std::vector<DenseOperator>& lindblads,
                                           LindbladMethod method = LindbladMethod::automatic);

struct PGConfig {
  int iterations = 2000;
  int batch_size = 32;
  int restarts = 5;
  int depth = 20;
  double total_time = 20.0;
  // Mean step, in units of the current standard deviation.
  double lr_mean = 0.5;
  double lr_logstd = 0.02;
  // Initial std as a fraction of the uniform hold time T / (K p).
  double init_std_fraction = 0.02;
  // Relative spread of the initial means around T / (K p).
  double init_mean_jitter = 0.3;
  // Mirrored sampling (eps, -eps) within each batch.
  bool antithetic = true;
  std::uint64_t seed = 0;
  // Restarts evaluated concurrently.
  int jobs = 1;

  void validate() const;
};

struct PGRestartResult {
  std::uint64_t seed = 0;
  SwitchingProtocol protocol;
  double fidelity = 0.0;
  // Best-so-far fidelity after each iteration.
  std::vector<double> trace;
};

struct PGResult {
  SwitchingProtocol protocol;
  FidelityReport report;
  int best_restart = 0;
  std::vector<PGRestartResult> restarts;

  const std::vector<double>& trace() const { return restarts[static_cast<std::size_t>(best_restart)].trace; }
};

// Seed of restart `index` derived from the master seed (SplitMix64 counter).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

// Single restart with an explicit seed.
PGRestartResult pg_run(const ProtocolObjective& objective, int n_hamiltonians, const PGConfig& cfg,
                       std::uint64_t seed);

PGResult pg_optimize(const ProtocolObjective& objective, int n_hamiltonians, const PGConfig& cfg,
                     FidelityKind kind = FidelityKind::unitary);

PGResult pg_optimize(const SwitchingAnsatz& ansatz, const TargetGate& target, const PGConfig& cfg,
                     FidelityKind kind = FidelityKind::unitary, const std::vector<DenseOperator>& lindblads = {});

// Rescales |x| to sum to total_time; all-zero input maps to uniform.
void project_durations(std::span<double> x, double total_time);

struct GrapeConfig {
  double lower = -1.2;
  double upper = 1.2;
  int max_iterations = 500;
  double gradient_tolerance = 1e-9;
  // Analytic gradient is compared against central differences before the
  // first step; a relative mismatch above this aborts.
  double check_tolerance = 1e-4;
  bool check_gradient = true;

  void validate() const;
};

struct GrapeResult {
  AmplitudeProtocol amplitudes;
  FidelityReport initial;
  FidelityReport report;
  int iterations = 0;
  bool finite_difference_fallback = false;
  double gradient_check_error = 0.0;
};

// Unitary fidelity of the amplitude protocol.
double amplitude_fidelity(const SwitchingAnsatz& ansatz, const TargetGate& target, std::span<const double> amplitudes,
                          std::span<const double> durations);

// Fidelity and its exact gradient with respect to the amplitudes. Throws
// SingularMatrixError when the overlap operator is rank deficient.
double amplitude_gradient(const SwitchingAnsatz& ansatz, const TargetGate& target, std::span<const double> amplitudes,
                          std::span<const double> durations, std::vector<double>& gradient);

// Central differences with step h.
std::vector<double> amplitude_gradient_fd(const SwitchingAnsatz& ansatz, const TargetGate& target,
                                          std::span<const double> amplitudes, std::span<const double> durations,
                                          double h = 1e-6);

// Box-constrained BFGS ascent from the alternating +/-1 amplitudes.
GrapeResult grape_refine(const SwitchingAnsatz& ansatz, const SwitchingProtocol& base, const TargetGate& target,
                         const GrapeConfig& cfg = {});

struct LandscapeDiagnostics {
  double grad_inf_norm = 0.0;
  std::vector<double> gradient;
  // Ascending.
  std::vector<double> hessian_eigenvalues;
  int n_positive = 0;
  int n_negative = 0;
  int n_zero = 0;
  double fidelity = 0.0;
};

inline constexpr double kHessianZeroThreshold = 1e-6;

// Central-difference gradient (step 1e-5 T/p) and Hessian of the fidelity
// in the hold times. Throws InvalidArgument when any duration is within two
// steps of zero.
LandscapeDiagnostics landscape_diagnostics(const ProtocolObjective& objective, const SwitchingProtocol& protocol);
LandscapeDiagnostics landscape_diagnostics(const SwitchingAnsatz& ansatz, const SwitchingProtocol& protocol,
                                           const TargetGate& target);

}  // namespace hswitch
