#pragma once

// Gate fidelities: bath-optimal unitary fidelity, Haar-averaged state
// fidelity, reference-state fidelity for open systems, and the MLI transform.

#include "hswitch/model.hpp"
#include "hswitch/operator.hpp"
#include "hswitch/propagate.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace hswitch {

enum class FidelityKind { unitary, avg_state, ref_state };

// MLI never exceeds this; 1 - F below ~1e-16 is roundoff.
inline constexpr double kMliCap = 16.0;

struct FidelityReport {
  double fidelity = 0.0;
  double mli = 0.0;
  FidelityKind kind = FidelityKind::unitary;
  std::optional<double> state_fid_mean;
  std::optional<double> state_fid_std;
  std::optional<int> samples;
};

// -log10(1 - F) with F clamped to [0, 1], capped at kMliCap.
double mli(double fidelity);
FidelityReport make_report(double fidelity, FidelityKind kind);

// Q = tr_S[(W kron I_B)^dagger U], an N_B x N_B matrix (system traced out).
Matrix overlap_operator(const Matrix& u, const Matrix& w);

// (||Q||_tr / N)^2 on raw matrices; u acts on system (leading sites) + bath.
double unitary_fidelity_value(const Matrix& u, const Matrix& w);

FidelityReport unitary_fidelity(const DenseOperator& u, const TargetGate& w, int n_system_sites);

// Normalized complex Gaussian vector.
Vector haar_random_state(int dim, std::mt19937_64& rng);
Vector haar_random_state(int dim, std::uint64_t seed);

// Mean and (sample) standard deviation of <psi_T| rho_S |psi_T> over M
// product Haar inputs |m_S> kron |m_B>, with |psi_T> = W |m_S>.
FidelityReport average_state_fidelity(const DenseOperator& u, const TargetGate& w, int n_system_sites,
                                      int m_samples = 100, std::uint64_t seed = 0);

// The d computational basis projectors plus the uniform-superposition state
// (all entries 1/d).
std::vector<Matrix> reference_states(int d);

// Maps system density matrices to system density matrices.
using SystemChannel = std::function<std::vector<Matrix>(const std::vector<Matrix>&)>;

FidelityReport reference_state_fidelity(const SystemChannel& channel, const TargetGate& w, int d);

// Channel obtained by attaching the bath in |0...0>, evolving through the
// hold times and tracing out the bath.
SystemChannel lindblad_channel(const LindbladPropagator& propagator, std::vector<double> durations, int system_dim);

// Embeds rho_S kron |0..0><0..0| and its inverse partial trace.
Matrix attach_ground_bath(const Matrix& rho_s, int bath_dim);
Matrix trace_out_bath(const Matrix& rho, int system_dim);

// Generator H' that produces the target in time T on its own:
//   Z: -(pi/2T) sz,  Hadamard: (pi/2T)(sx + sz)/sqrt2,  T: (pi/8T) sz,
//   CNOT: -(pi/4T)(I - sz_0)(I - sx_1).
DenseOperator no_control_generator(GateName gate, double total_time, int total_sites);

// Unitary fidelity of exp(-i (H' + H_env + H_I) T), i.e. H_S replaced by H'.
FidelityReport no_control_baseline(const SpinSystemSpec& spec, const TargetGate& w, double total_time);

std::string to_string(FidelityKind kind);
FidelityKind parse_fidelity_kind(std::string_view s);

}  // namespace hswitch
