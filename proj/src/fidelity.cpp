#include "hswitch/fidelity.hpp"

#include "hswitch/errors.hpp"

#include <cmath>
#include <numbers>

namespace hswitch {

double mli(double fidelity) {
  const double f = std::clamp(fidelity, 0.0, 1.0);
  const double infidelity = 1.0 - f;
  if (infidelity <= std::pow(10.0, -kMliCap)) return kMliCap;
  return std::min(kMliCap, -std::log10(infidelity));
}

FidelityReport make_report(double fidelity, FidelityKind kind) {
  FidelityReport r;
  r.fidelity = std::clamp(fidelity, 0.0, 1.0);
  r.mli = mli(r.fidelity);
  r.kind = kind;
  return r;
}

Matrix overlap_operator(const Matrix& u, const Matrix& w) {
  const auto ns = w.rows();
  if (w.cols() != ns || u.rows() != u.cols() || ns == 0 || u.rows() % ns != 0) {
    throw DimensionError("overlap_operator: target does not divide the propagator dimension");
  }
  const auto nb = u.rows() / ns;
  Matrix q = Matrix::Zero(nb, nb);
  for (Eigen::Index s = 0; s < ns; ++s) {
    for (Eigen::Index r = 0; r < ns; ++r) {
      const cplx c = std::conj(w(r, s));
      if (c != cplx(0.0, 0.0)) q += c * u.block(r * nb, s * nb, nb, nb);
    }
  }
  return q;
}

double unitary_fidelity_value(const Matrix& u, const Matrix& w) {
  const double n = static_cast<double>(u.rows());
  const double tn = trace_norm(overlap_operator(u, w));
  return std::clamp((tn / n) * (tn / n), 0.0, 1.0);
}

FidelityReport unitary_fidelity(const DenseOperator& u, const TargetGate& w, int n_system_sites) {
  if (w.n_qubits() != n_system_sites) throw DimensionError("target does not act on the system sites");
  if (u.num_sites() < n_system_sites) throw DimensionError("propagator has fewer sites than the system");
  int sys_dim = 1;
  for (int s = 0; s < n_system_sites; ++s) sys_dim *= u.site_dims()[static_cast<std::size_t>(s)];
  if (sys_dim != w.matrix.dim()) throw DimensionError("target dimension does not match the system sites");
  return make_report(unitary_fidelity_value(u.matrix(), w.matrix.matrix()), FidelityKind::unitary);
}

Vector haar_random_state(int dim, std::mt19937_64& rng) {
  if (dim < 1) throw InvalidArgument("state dimension must be positive");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v(i) = cplx(re, im);
  }
  return v / v.norm();
}

Vector haar_random_state(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return haar_random_state(dim, rng);
}

FidelityReport average_state_fidelity(const DenseOperator& u, const TargetGate& w, int n_system_sites,
                                      int m_samples, std::uint64_t seed) {
  if (m_samples < 1) throw InvalidArgument("m_samples must be at least 1");
  if (w.n_qubits() != n_system_sites) throw DimensionError("target does not act on the system sites");
  const int ns = w.matrix.dim();
  if (u.dim() % ns != 0) throw DimensionError("target dimension does not divide the propagator dimension");
  const int nb = u.dim() / ns;
  std::mt19937_64 rng(seed);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(m_samples));
  for (int m = 0; m < m_samples; ++m) {
    const Vector psi_s = haar_random_state(ns, rng);
    const Vector psi_b = haar_random_state(nb, rng);
    Vector psi(ns * nb);
    for (int s = 0; s < ns; ++s) psi.segment(s * nb, nb) = psi_s(s) * psi_b;
    const Vector out = u.matrix() * psi;
    const Vector target = w.matrix.matrix() * psi_s;
    // <psi_T| tr_B |out><out| |psi_T> = sum_b |sum_s conj(psi_T(s)) out(s, b)|^2
    Vector proj = Vector::Zero(nb);
    for (int s = 0; s < ns; ++s) proj += std::conj(target(s)) * out.segment(s * nb, nb);
    values.push_back(proj.squaredNorm());
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= m_samples;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = m_samples > 1 ? std::sqrt(var / (m_samples - 1)) : 0.0;
  FidelityReport r = make_report(mean, FidelityKind::avg_state);
  r.state_fid_mean = mean;
  r.state_fid_std = sd;
  r.samples = m_samples;
  return r;
}

std::vector<Matrix> reference_states(int d) {
  if (d != 2 && d != 4) throw InvalidArgument("reference-state dimension must be 2 or 4");
  std::vector<Matrix> out;
  for (int i = 0; i < d; ++i) {
    Matrix rho = Matrix::Zero(d, d);
    rho(i, i) = 1.0;
    out.push_back(std::move(rho));
  }
  out.push_back(Matrix::Constant(d, d, cplx(1.0 / d, 0.0)));
  return out;
}

FidelityReport reference_state_fidelity(const SystemChannel& channel, const TargetGate& w, int d) {
  const std::vector<Matrix> refs = reference_states(d);
  if (w.matrix.dim() != d) throw DimensionError("target dimension does not match d");
  const std::vector<Matrix> images = channel(refs);
  if (images.size() != refs.size()) throw DimensionError("channel returned the wrong number of states");
  const Matrix& wm = w.matrix.matrix();
  const double weight = 1.0 / (d + 1);
  double f = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (images[i].rows() != d || images[i].cols() != d) throw DimensionError("channel output has the wrong dimension");
    const double purity = (refs[i] * refs[i]).trace().real();
    const Matrix rotated = wm * refs[i] * wm.adjoint();
    f += weight / purity * (rotated * images[i]).trace().real();
  }
  return make_report(f, FidelityKind::ref_state);
}

Matrix attach_ground_bath(const Matrix& rho_s, int bath_dim) {
  const auto d = rho_s.rows();
  Matrix out = Matrix::Zero(d * bath_dim, d * bath_dim);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out(i * bath_dim, j * bath_dim) = rho_s(i, j);
  }
  return out;
}

Matrix trace_out_bath(const Matrix& rho, int system_dim) {
  const auto nb = rho.rows() / system_dim;
  Matrix out(system_dim, system_dim);
  for (int i = 0; i < system_dim; ++i) {
    for (int j = 0; j < system_dim; ++j) out(i, j) = rho.block(i * nb, j * nb, nb, nb).trace();
  }
  return out;
}

SystemChannel lindblad_channel(const LindbladPropagator& propagator, std::vector<double> durations, int system_dim) {
  if (propagator.dim() % system_dim != 0) throw DimensionError("system dimension does not divide the model");
  const int bath_dim = propagator.dim() / system_dim;
  return [&propagator, durations = std::move(durations), system_dim, bath_dim](const std::vector<Matrix>& inputs) {
    std::vector<Matrix> full;
    full.reserve(inputs.size());
    for (const auto& r : inputs) full.push_back(attach_ground_bath(r, bath_dim));
    std::vector<Matrix> evolved = propagator.evolve(full, durations);
    std::vector<Matrix> out;
    out.reserve(evolved.size());
    for (const auto& r : evolved) out.push_back(trace_out_bath(r, system_dim));
    return out;
  };
}

DenseOperator no_control_generator(GateName gate, double total_time, int total_sites) {
  if (!(total_time > 0.0)) throw InvalidArgument("total time must be positive");
  const double pi = std::numbers::pi;
  switch (gate) {
    case GateName::Z:
      return (-pi / (2.0 * total_time)) * pauli_at(0, PauliAxis::z, total_sites);
    case GateName::Hadamard:
      return (pi / (2.0 * total_time * std::sqrt(2.0))) *
             (pauli_at(0, PauliAxis::x, total_sites) + pauli_at(0, PauliAxis::z, total_sites));
    case GateName::T:
      return (pi / (8.0 * total_time)) * pauli_at(0, PauliAxis::z, total_sites);
    case GateName::CNOT: {
      if (total_sites < 2) throw InvalidArgument("CNOT generator needs two system qubits");
      const DenseOperator id = DenseOperator::qubits_identity(total_sites);
      return (-pi / (4.0 * total_time)) *
             ((id - pauli_at(0, PauliAxis::z, total_sites)) * (id - pauli_at(1, PauliAxis::x, total_sites)));
    }
    case GateName::custom:
      break;
  }
  throw InvalidArgument("no registered no-control generator for gate " + to_string(gate));
}

FidelityReport no_control_baseline(const SpinSystemSpec& spec, const TargetGate& w, double total_time) {
  if (w.n_qubits() != spec.n_qubits) throw DimensionError("target arity does not match the model");
  const StaticHamiltonians hs = build_static_hamiltonians(spec);
  const DenseOperator h = no_control_generator(w.name, total_time, spec.total_sites()) + hs.environment + hs.interaction;
  const DenseOperator u = expm_hermitian_propagator(h, total_time);
  return unitary_fidelity(u, w, spec.n_qubits);
}

std::string to_string(FidelityKind kind) {
  switch (kind) {
    case FidelityKind::unitary: return "unitary";
    case FidelityKind::avg_state: return "avg_state";
    case FidelityKind::ref_state: return "ref_state";
  }
  return "unknown";
}

FidelityKind parse_fidelity_kind(std::string_view s) {
  if (s == "unitary") return FidelityKind::unitary;
  if (s == "avg_state") return FidelityKind::avg_state;
  if (s == "ref_state") return FidelityKind::ref_state;
  throw InvalidArgument("unknown fidelity kind '" + std::string(s) + "'");
}

}  // namespace hswitch
