#pragma once

// Time evolution: switching protocols, amplitude-modulated (GRAPE form)
// protocols, Lindblad dynamics and control-free reduced dynamics.

#include "hswitch/model.hpp"
#include "hswitch/operator.hpp"

#include <span>
#include <vector>

namespace hswitch {

// Hold times (alpha_1, beta_1, ..., alpha_p, beta_p) for a two-Hamiltonian
// ansatz, or p rounds of four hold times for the four-Hamiltonian one.
// Segment i is evolved under ansatz Hamiltonian i mod K.
struct SwitchingProtocol {
  std::vector<double> durations;
  int depth = 0;
  double total_time = 0.0;

  // depth = durations.size() / n_hamiltonians, total_time = sum |durations|.
  static SwitchingProtocol from_durations(std::vector<double> durations, int n_hamiltonians);
  // Uniform hold times T / (K p).
  static SwitchingProtocol uniform(int depth, double total_time, int n_hamiltonians);

  // Checks the length and that sum |durations| == total_time within 1e-9.
  void validate(int n_hamiltonians) const;
};

// GRAPE form: segment i evolves under drift + amplitudes[i] * control.
struct AmplitudeProtocol {
  std::vector<double> amplitudes;
  double lower = -1.2;
  double upper = 1.2;
  SwitchingProtocol base;

  // Amplitudes +1, -1, +1, ... which reproduce the switching protocol.
  static AmplitudeProtocol alternating(const SwitchingProtocol& base);
  void validate() const;
};

struct PropagationResult {
  DenseOperator final_operator;
  // Per-segment unitaries in time order, filled only when requested.
  std::vector<DenseOperator> step_unitaries;
};

// Propagator for a fixed ansatz with the eigendecomposition of every
// Hamiltonian computed once. Evolution alternates between eigenbases so each
// segment costs a diagonal phase and one basis change.
class SwitchingPropagator {
 public:
  explicit SwitchingPropagator(const SwitchingAnsatz& ansatz);

  int dim() const { return dim_; }
  int n_hamiltonians() const { return static_cast<int>(eigenvalues_.size()); }

  // U for the given hold times; negative entries are used by absolute value.
  Matrix unitary(std::span<const double> durations) const;

 private:
  int dim_ = 0;
  std::vector<Eigen::VectorXd> eigenvalues_;
  std::vector<Matrix> eigenvectors_;
  // transitions_[k] = V_{k+1}^dagger V_k (cyclic).
  std::vector<Matrix> transitions_;
};

// Product of exponentials with the first segment applied first. Negative
// durations are replaced by their absolute values.
PropagationResult propagate_switching(const SwitchingAnsatz& ansatz, const SwitchingProtocol& protocol,
                                      bool cache_steps = false);

// Requires an ansatz with exactly one control generator.
PropagationResult propagate_amplitudes(const SwitchingAnsatz& ansatz, const AmplitudeProtocol& amp,
                                       bool cache_steps = false);

struct HamiltonianSegment {
  DenseOperator hamiltonian;
  double duration = 0.0;
};
using HamiltonianSchedule = std::vector<HamiltonianSegment>;

HamiltonianSchedule switching_schedule(const SwitchingAnsatz& ansatz, const SwitchingProtocol& protocol);

enum class LindbladMethod { superop, ode, automatic };

// Largest total site count for which `automatic` picks the superoperator.
inline constexpr int kSuperopMaxSites = 3;

// Column-stacking Liouvillian: vec(d rho/dt) = L vec(rho), with
// vec(A rho B) = (B^T kron A) vec(rho).
Matrix liouvillian(const DenseOperator& h, const std::vector<DenseOperator>& lindblads);

Matrix vectorize(const Matrix& rho);
Matrix unvectorize(const Matrix& v, int dim);

// Evolves rho0 through the schedule. The ODE branch uses an adaptive
// Dormand-Prince 5(4) integrator (abs/rel tol 1e-10) restarted at every
// segment boundary.
DensityMatrix lindblad_propagate(const HamiltonianSchedule& schedule, const std::vector<DenseOperator>& lindblads,
                                 const DensityMatrix& rho0, LindbladMethod method = LindbladMethod::automatic);

// Lindblad evolution under the cyclic Hamiltonian list of an ansatz with
// per-Hamiltonian caches, for repeated evaluation inside optimizers.
class LindbladPropagator {
 public:
  LindbladPropagator(const SwitchingAnsatz& ansatz, std::vector<DenseOperator> lindblads,
                     LindbladMethod method = LindbladMethod::automatic);

  int dim() const { return dim_; }
  bool uses_superop() const { return superop_; }

  // Evolves each density matrix through the hold times (absolute values).
  std::vector<Matrix> evolve(const std::vector<Matrix>& rho0, std::span<const double> durations) const;

 private:
  struct Generator {
    Matrix liouvillian;
    bool diagonalized = false;
    Vector eigenvalues;
    Matrix eigenvectors;
    Matrix inverse;
  };

  int dim_ = 0;
  bool superop_ = true;
  std::vector<DenseOperator> hamiltonians_;
  std::vector<DenseOperator> lindblads_;
  std::vector<Generator> generators_;
};

// <0| rho_S(t) |0> with the qubit in |0> and the bath maximally mixed,
// evolved under H_S + H_env + H_I. Averages exactly over bath basis states.
std::vector<double> reduced_dynamics_no_control(const SpinSystemSpec& spec, std::span<const double> t_grid);

LindbladMethod parse_lindblad_method(std::string_view s);
std::string to_string(LindbladMethod method);

}  // namespace hswitch
