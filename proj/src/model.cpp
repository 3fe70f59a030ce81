#include "hswitch/model.hpp"

#include "hswitch/errors.hpp"

#include <cmath>
#include <random>

namespace hswitch {

namespace {

Matrix pauli_matrix(PauliAxis axis) {
  Matrix m = Matrix::Zero(2, 2);
  const cplx i(0.0, 1.0);
  switch (axis) {
    case PauliAxis::x: m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case PauliAxis::y: m(0, 1) = -i; m(1, 0) = i; break;
    case PauliAxis::z: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    // |0> is the ground state of -E/2 sigma^z: lowering maps |1> -> |0>.
    case PauliAxis::plus: m(1, 0) = 1.0; break;
    case PauliAxis::minus: m(0, 1) = 1.0; break;
  }
  return m;
}

DenseOperator two_site(int a, PauliAxis pa, int b, PauliAxis pb, int n) {
  return pauli_at(a, pa, n) * pauli_at(b, pb, n);
}

bool all_zero(const std::vector<double>& v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

}  // namespace

int SpinSystemSpec::total_bath() const {
  int total = 0;
  for (int c : bath_counts) total += c;
  return total;
}

int SpinSystemSpec::bath_owner(int bath_index) const {
  int seen = 0;
  for (int q = 0; q < n_qubits; ++q) {
    seen += bath_counts[static_cast<std::size_t>(q)];
    if (bath_index < seen) return q;
  }
  throw InvalidArgument("bath index out of range");
}

double SpinSystemSpec::drive_x() const {
  if (control_strength_x) return *control_strength_x;
  return n_qubits == 1 ? 2.0 * qubit_splittings.at(0) : qubit_splittings.at(0);
}

double SpinSystemSpec::drive_y() const {
  return control_strength_y ? *control_strength_y : 1.5 * qubit_splittings.at(0);
}

void SpinSystemSpec::validate() const {
  if (n_qubits != 1 && n_qubits != 2) throw InvalidArgument("n_qubits must be 1 or 2");
  if (static_cast<int>(bath_counts.size()) != n_qubits) {
    throw InvalidArgument("bath_counts must have one entry per system qubit");
  }
  for (int c : bath_counts) {
    if (c < 0) throw InvalidArgument("bath counts must be nonnegative");
  }
  if (static_cast<int>(qubit_splittings.size()) != n_qubits) {
    throw InvalidArgument("qubit_splittings must have one entry per system qubit");
  }
  for (double e : qubit_splittings) {
    if (e < 0.0) throw InvalidArgument("splittings must be nonnegative");
  }
  const int nb = total_bath();
  if (static_cast<int>(couplings.size()) != nb) {
    throw InvalidArgument("couplings must have one entry per bath spin (" + std::to_string(nb) + ")");
  }
  for (double a : couplings) {
    if (!(a > 0.0)) throw InvalidArgument("couplings must be positive");
  }
  if (!bath_splittings.empty() && static_cast<int>(bath_splittings.size()) != nb) {
    throw InvalidArgument("bath_splittings must be empty or have one entry per bath spin");
  }
  for (double d : bath_splittings) {
    if (d < 0.0) throw InvalidArgument("splittings must be nonnegative");
  }
  if (frame == Frame::rotating && !all_zero(bath_splittings)) {
    throw InvalidArgument("rotating frame requires zero bath splittings");
  }
  if (t1_system && !(*t1_system > 0.0)) throw InvalidArgument("t1_system must be positive");
  if (t1_tls && !(*t1_tls > 0.0)) throw InvalidArgument("t1_tls must be positive");
  check_dim_cap(dim());
}

double SwitchingAnsatz::reconstruction_error() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < hamiltonians.size(); ++k) {
    Matrix rebuilt = drift.matrix();
    for (std::size_t j = 0; j < controls.size(); ++j) {
      rebuilt += static_cast<double>(signs[k][j]) * controls[j].matrix();
    }
    worst = std::max(worst, (rebuilt - hamiltonians[k].matrix()).cwiseAbs().maxCoeff());
  }
  return worst;
}

DenseOperator pauli_at(int site, PauliAxis axis, int total_sites) {
  if (site < 0 || site >= total_sites) {
    throw DimensionError("pauli_at: site " + std::to_string(site) + " out of range for " +
                         std::to_string(total_sites) + " sites");
  }
  DenseOperator out(Matrix::Identity(1, 1), {1});
  const DenseOperator id2 = DenseOperator::identity({2});
  const DenseOperator p(pauli_matrix(axis), {2});
  for (int s = 0; s < total_sites; ++s) {
    out = kron(out, s == site ? p : id2);
  }
  // Drop the leading unit site used to seed the product.
  return {out.matrix(), std::vector<int>(static_cast<std::size_t>(total_sites), 2)};
}

StaticHamiltonians build_static_hamiltonians(const SpinSystemSpec& spec) {
  spec.validate();
  if (spec.n_qubits == 2 && spec.coupling_kind == CouplingKind::isotropic) {
    throw InvalidArgument("two system qubits with isotropic coupling is not supported");
  }
  const int n = spec.total_sites();
  const auto dims = spec.site_dims();
  StaticHamiltonians h{DenseOperator::zero(dims), DenseOperator::zero(dims), DenseOperator::zero(dims)};

  for (int q = 0; q < spec.n_qubits; ++q) {
    h.system -= (spec.qubit_splittings[static_cast<std::size_t>(q)] / 2.0) * pauli_at(q, PauliAxis::z, n);
  }
  if (spec.n_qubits == 2) {
    h.system += spec.qubit_qubit_coupling * two_site(0, PauliAxis::z, 1, PauliAxis::z, n);
  }

  for (int b = 0; b < spec.total_bath(); ++b) {
    const int site = spec.n_qubits + b;
    const int owner = spec.bath_owner(b);
    const double a = spec.couplings[static_cast<std::size_t>(b)];
    if (!spec.bath_splittings.empty()) {
      h.environment -= (spec.bath_splittings[static_cast<std::size_t>(b)] / 2.0) * pauli_at(site, PauliAxis::z, n);
    }
    if (spec.coupling_kind == CouplingKind::isotropic) {
      for (PauliAxis ax : {PauliAxis::x, PauliAxis::y, PauliAxis::z}) {
        h.interaction += a * two_site(owner, ax, site, ax, n);
      }
    } else {
      h.interaction += (a / 4.0) * (two_site(owner, PauliAxis::x, site, PauliAxis::x, n) +
                                    two_site(owner, PauliAxis::y, site, PauliAxis::y, n));
    }
  }
  return h;
}

SwitchingAnsatz build_switching_ansatz(const SpinSystemSpec& spec, AnsatzVariant variant) {
  const StaticHamiltonians h = build_static_hamiltonians(spec);
  const int n = spec.total_sites();
  const double e = spec.qubit_splittings.at(0);

  SwitchingAnsatz ansatz;
  ansatz.drift = h.system + h.environment + h.interaction;
  ansatz.n_system_sites = spec.n_qubits;

  switch (variant) {
    case AnsatzVariant::two_ham_x:
    case AnsatzVariant::two_ham_z_nonuniversal:
    case AnsatzVariant::four_ham_xy:
      if (spec.n_qubits != 1) {
        throw InvalidArgument(to_string(variant) + " ansatz requires a single system qubit");
      }
      break;
    case AnsatzVariant::two_qubit:
      if (spec.n_qubits != 2) throw InvalidArgument("two_qubit ansatz requires two system qubits");
      break;
  }

  switch (variant) {
    case AnsatzVariant::two_ham_x:
      ansatz.controls = {spec.drive_x() * pauli_at(0, PauliAxis::x, n)};
      ansatz.signs = {{1}, {-1}};
      break;
    case AnsatzVariant::two_ham_z_nonuniversal:
      ansatz.controls = {2.0 * e * pauli_at(0, PauliAxis::z, n)};
      ansatz.signs = {{1}, {-1}};
      ansatz.universal = false;
      break;
    case AnsatzVariant::four_ham_xy:
      ansatz.controls = {spec.drive_x() * pauli_at(0, PauliAxis::x, n),
                         spec.drive_y() * pauli_at(0, PauliAxis::y, n)};
      ansatz.signs = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
      break;
    case AnsatzVariant::two_qubit:
      ansatz.controls = {spec.drive_x() * (pauli_at(0, PauliAxis::x, n) + pauli_at(1, PauliAxis::x, n))};
      ansatz.signs = {{1}, {-1}};
      break;
  }

  for (const auto& signs : ansatz.signs) {
    DenseOperator hk = ansatz.drift;
    for (std::size_t j = 0; j < signs.size(); ++j) hk += static_cast<double>(signs[j]) * ansatz.controls[j];
    ansatz.hamiltonians.push_back(std::move(hk));
  }
  return ansatz;
}

std::vector<DenseOperator> build_lindblad_operators(const SpinSystemSpec& spec) {
  spec.validate();
  std::vector<DenseOperator> out;
  const int n = spec.total_sites();
  if (spec.t1_system) {
    const double rate = 1.0 / std::sqrt(*spec.t1_system);
    for (int q = 0; q < spec.n_qubits; ++q) out.push_back(rate * pauli_at(q, PauliAxis::minus, n));
  }
  if (spec.t1_tls) {
    const double rate = 1.0 / std::sqrt(*spec.t1_tls);
    for (int b = 0; b < spec.total_bath(); ++b) {
      out.push_back(rate * pauli_at(spec.n_qubits + b, PauliAxis::minus, n));
    }
  }
  return out;
}

SpinSystemSpec standard_parameter_presets(std::string_view name, const PresetOptions& options) {
  SpinSystemSpec spec;
  std::mt19937_64 rng(options.seed);

  auto single_bath_count = [&]() {
    if (options.bath_counts.size() != 1) {
      throw InvalidArgument("preset '" + std::string(name) + "' takes a single bath count");
    }
    return options.bath_counts[0];
  };

  if (name == "iso_equal" || name == "iso_variable") {
    const int n = single_bath_count();
    spec.bath_counts = {n};
    spec.coupling_kind = CouplingKind::isotropic;
    spec.frame = Frame::rotating;
    spec.qubit_splittings = {1.0};
    if (name == "iso_equal") {
      spec.couplings.assign(static_cast<std::size_t>(n), 1.0);
    } else {
      std::uniform_real_distribution<double> dist(1.0, 2.0);
      for (int q = 0; q < n; ++q) spec.couplings.push_back(dist(rng));
      spec.coupling_seed = options.seed;
    }
  } else if (name == "dipole_device") {
    // E = 8 GHz normalized to 1; Delta_q = 8 + 0.8 q GHz; A_q in 4..40 MHz.
    const int n = single_bath_count();
    spec.bath_counts = {n};
    spec.coupling_kind = CouplingKind::dipole;
    spec.frame = Frame::lab;
    spec.qubit_splittings = {1.0};
    std::uniform_real_distribution<double> dist(5e-4, 5e-3);
    for (int q = 1; q <= n; ++q) {
      spec.bath_splittings.push_back(1.0 + 0.1 * q);
      spec.couplings.push_back(dist(rng));
    }
    spec.coupling_seed = options.seed;
  } else if (name == "dipole_2qubit") {
    if (options.bath_counts.size() != 2) throw InvalidArgument("dipole_2qubit takes two bath counts");
    spec.n_qubits = 2;
    spec.bath_counts = options.bath_counts;
    spec.coupling_kind = CouplingKind::dipole;
    spec.frame = Frame::lab;
    spec.qubit_splittings = {1.0, 8.4 / 8.0};
    std::uniform_real_distribution<double> dist(5e-4, 5e-3);
    for (int count : options.bath_counts) {
      for (int q = 1; q <= count; ++q) {
        spec.bath_splittings.push_back(1.0 + 0.1 * q);
        spec.couplings.push_back(dist(rng));
      }
    }
    spec.coupling_seed = options.seed;
  } else {
    throw InvalidArgument("unknown preset '" + std::string(name) + "'");
  }
  spec.validate();
  return spec;
}

TargetGate build_target(GateName name, int n_qubits) {
  const cplx i(0.0, 1.0);
  Matrix m;
  switch (name) {
    case GateName::Z:
      m = Matrix::Zero(2, 2);
      m(0, 0) = 1.0;
      m(1, 1) = -1.0;
      break;
    case GateName::Hadamard:
      m = Matrix::Ones(2, 2) / std::sqrt(2.0);
      m(1, 1) = -1.0 / std::sqrt(2.0);
      break;
    case GateName::T:
      m = Matrix::Zero(2, 2);
      m(0, 0) = 1.0;
      m(1, 1) = std::exp(i * (std::numbers::pi / 4.0));
      break;
    case GateName::CNOT:
      m = Matrix::Zero(4, 4);
      m(0, 0) = 1.0;
      m(1, 1) = 1.0;
      m(2, 3) = 1.0;
      m(3, 2) = 1.0;
      break;
    case GateName::custom:
      throw InvalidArgument("custom gates are built with custom_target");
  }
  const int arity = m.rows() == 2 ? 1 : 2;
  if (arity != n_qubits) {
    throw InvalidArgument(to_string(name) + " acts on " + std::to_string(arity) + " qubit(s), requested " +
                          std::to_string(n_qubits));
  }
  return {name, DenseOperator(m, std::vector<int>(static_cast<std::size_t>(arity), 2))};
}

TargetGate custom_target(const Matrix& unitary) {
  const auto n = unitary.rows();
  int sites = 0;
  while ((Eigen::Index{1} << sites) < n) ++sites;
  if ((Eigen::Index{1} << sites) != n || unitary.cols() != n) {
    throw DimensionError("custom target must be a square matrix of power-of-two size");
  }
  TargetGate gate{GateName::custom, DenseOperator(unitary, std::vector<int>(static_cast<std::size_t>(sites), 2))};
  if (!gate.matrix.is_unitary(1e-12)) throw InvalidArgument("custom target is not unitary");
  return gate;
}

std::string to_string(CouplingKind kind) { return kind == CouplingKind::isotropic ? "isotropic" : "dipole"; }

std::string to_string(Frame frame) { return frame == Frame::lab ? "lab" : "rotating"; }

std::string to_string(AnsatzVariant variant) {
  switch (variant) {
    case AnsatzVariant::two_ham_x: return "two_ham_x";
    case AnsatzVariant::two_ham_z_nonuniversal: return "two_ham_z_nonuniversal";
    case AnsatzVariant::four_ham_xy: return "four_ham_xy";
    case AnsatzVariant::two_qubit: return "two_qubit";
  }
  return "unknown";
}

std::string to_string(GateName gate) {
  switch (gate) {
    case GateName::Z: return "Z";
    case GateName::Hadamard: return "Hadamard";
    case GateName::T: return "T";
    case GateName::CNOT: return "CNOT";
    case GateName::custom: return "custom";
  }
  return "unknown";
}

CouplingKind parse_coupling_kind(std::string_view s) {
  if (s == "isotropic" || s == "iso") return CouplingKind::isotropic;
  if (s == "dipole") return CouplingKind::dipole;
  throw InvalidArgument("unknown coupling kind '" + std::string(s) + "'");
}

Frame parse_frame(std::string_view s) {
  if (s == "lab") return Frame::lab;
  if (s == "rotating") return Frame::rotating;
  throw InvalidArgument("unknown frame '" + std::string(s) + "'");
}

AnsatzVariant parse_ansatz_variant(std::string_view s) {
  for (auto v : {AnsatzVariant::two_ham_x, AnsatzVariant::two_ham_z_nonuniversal, AnsatzVariant::four_ham_xy,
                 AnsatzVariant::two_qubit}) {
    if (s == to_string(v)) return v;
  }
  throw InvalidArgument("unknown ansatz variant '" + std::string(s) + "'");
}

GateName parse_gate_name(std::string_view s) {
  for (auto g : {GateName::Z, GateName::Hadamard, GateName::T, GateName::CNOT}) {
    if (s == to_string(g)) return g;
  }
  if (s == "H") return GateName::Hadamard;
  throw InvalidArgument("unknown gate '" + std::string(s) + "'");
}

}  // namespace hswitch
