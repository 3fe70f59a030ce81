#pragma once

// Physical models: central-spin Hamiltonians (isotropic Heisenberg and
// dipolar/TLS couplings), switching ansatze, Lindblad operators, target gates
// and the standard parameter presets.
//
// Site layout: system qubits first (0 or 0,1), then bath spins. For two
// system qubits the bath spins of qubit 0 precede those of qubit 1.
//
// Units: energies are normalized so the (first) qubit splitting is 1; for
// the dipolar presets one time unit is 1/(16 pi) ns.

#include "hswitch/operator.hpp"

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hswitch {

enum class CouplingKind { isotropic, dipole };
enum class Frame { lab, rotating };
enum class PauliAxis { x, y, z, plus, minus };
enum class AnsatzVariant { two_ham_x, two_ham_z_nonuniversal, four_ham_xy, two_qubit };
enum class GateName { Z, Hadamard, T, CNOT, custom };

// One simulation time unit in nanoseconds for the dipolar presets.
inline constexpr double kNanosecondsPerUnit = 1.0 / (16.0 * std::numbers::pi);

inline double ns_to_units(double ns) { return ns / kNanosecondsPerUnit; }
inline double units_to_ns(double units) { return units * kNanosecondsPerUnit; }

struct SpinSystemSpec {
  int n_qubits = 1;
  // Bath spins attached to each system qubit (size n_qubits).
  std::vector<int> bath_counts{0};
  CouplingKind coupling_kind = CouplingKind::isotropic;
  Frame frame = Frame::rotating;
  std::vector<double> qubit_splittings{1.0};
  // Per bath spin, in site order. Empty (or all zero) in the rotating frame.
  std::vector<double> bath_splittings;
  // Per bath spin, in site order.
  std::vector<double> couplings;
  double qubit_qubit_coupling = 0.025;
  // Coefficient of the sigma^x drive; defaults to 2E (1 qubit) or E_0 (2 qubits).
  std::optional<double> control_strength_x;
  // Coefficient of the sigma^y drive of the four-Hamiltonian ansatz; default 3E/2.
  std::optional<double> control_strength_y;
  // T_1 times in simulation units.
  std::optional<double> t1_system;
  std::optional<double> t1_tls;
  // Seed used to sample variable couplings, when applicable.
  std::optional<std::uint64_t> coupling_seed;

  int total_bath() const;
  int total_sites() const { return n_qubits + total_bath(); }
  int dim() const { return 1 << total_sites(); }
  std::vector<int> site_dims() const { return std::vector<int>(static_cast<std::size_t>(total_sites()), 2); }
  // Index of the system qubit a bath site couples to.
  int bath_owner(int bath_index) const;
  double drive_x() const;
  double drive_y() const;

  // Throws InvalidArgument on any broken invariant.
  void validate() const;
};

struct StaticHamiltonians {
  DenseOperator system;       // H_S
  DenseOperator environment;  // H_env
  DenseOperator interaction;  // H_I
};

// Hamiltonians of a switching ansatz. Hamiltonian k equals
// drift + sum_j signs[k][j] * controls[j].
struct SwitchingAnsatz {
  std::vector<DenseOperator> hamiltonians;
  DenseOperator drift;
  std::vector<DenseOperator> controls;
  std::vector<std::vector<int>> signs;
  bool universal = true;
  int n_system_sites = 1;

  int dim() const { return drift.dim(); }
  std::size_t size() const { return hamiltonians.size(); }
  // Max entrywise deviation of the stored Hamiltonians from drift +/- controls.
  double reconstruction_error() const;
};

struct TargetGate {
  GateName name = GateName::custom;
  DenseOperator matrix;

  int n_qubits() const { return matrix.num_sites(); }
};

DenseOperator pauli_at(int site, PauliAxis axis, int total_sites);

StaticHamiltonians build_static_hamiltonians(const SpinSystemSpec& spec);

SwitchingAnsatz build_switching_ansatz(const SpinSystemSpec& spec, AnsatzVariant variant);

// Spontaneous-emission operators: one per system qubit (rate 1/T_1^S) and one
// per bath spin (rate 1/T_1^TLS). Empty when neither T_1 is set.
std::vector<DenseOperator> build_lindblad_operators(const SpinSystemSpec& spec);

struct PresetOptions {
  // Bath spins per qubit; one entry for the single-qubit presets.
  std::vector<int> bath_counts{2};
  std::uint64_t seed = 0;
};

// Presets: "iso_equal", "iso_variable", "dipole_device", "dipole_2qubit".
SpinSystemSpec standard_parameter_presets(std::string_view name, const PresetOptions& options = {});

TargetGate build_target(GateName name, int n_qubits);
TargetGate custom_target(const Matrix& unitary);

std::string to_string(CouplingKind kind);
std::string to_string(Frame frame);
std::string to_string(AnsatzVariant variant);
std::string to_string(GateName gate);
CouplingKind parse_coupling_kind(std::string_view s);
Frame parse_frame(std::string_view s);
AnsatzVariant parse_ansatz_variant(std::string_view s);
GateName parse_gate_name(std::string_view s);

}  // namespace hswitch
