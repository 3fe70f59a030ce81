#include "hswitch/propagate.hpp"

#include "hswitch/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <numeric>

namespace hswitch {

namespace {

int n_hamiltonians_of(const SwitchingAnsatz& ansatz) { return static_cast<int>(ansatz.size()); }

double abs_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

int qubit_count(int dim) {
  int n = 0;
  while ((1 << n) < dim) ++n;
  return n;
}

void check_schedule_dims(const SwitchingAnsatz& ansatz, const SwitchingProtocol& protocol) {
  if (ansatz.size() == 0) throw InvalidArgument("ansatz has no Hamiltonians");
  protocol.validate(n_hamiltonians_of(ansatz));
}

// Adaptive RK integration of the Lindblad equation over one constant segment.
class LindbladRhs {
 public:
  LindbladRhs(const Matrix& h, const std::vector<DenseOperator>& lindblads) : dim_(static_cast<int>(h.rows())) {
    const cplx i(0.0, 1.0);
    Matrix decay = Matrix::Zero(dim_, dim_);
    for (const auto& l : lindblads) {
      jumps_.push_back(l.matrix());
      jumps_adj_.push_back(l.matrix().adjoint());
      decay += l.matrix().adjoint() * l.matrix();
    }
    // d rho/dt = -i (K rho - rho K^dagger) + sum L rho L^dagger, K = H - (i/2) sum L^dagger L.
    k_ = -i * (h - 0.5 * i * decay);
    k_adj_ = k_.adjoint();
  }

  void operator()(const std::vector<cplx>& x, std::vector<cplx>& dxdt, double /*t*/) const {
    Eigen::Map<const Matrix> rho(x.data(), dim_, dim_);
    dxdt.resize(x.size());
    Eigen::Map<Matrix> out(dxdt.data(), dim_, dim_);
    out.noalias() = k_ * rho;
    out.noalias() += rho * k_adj_;
    for (std::size_t j = 0; j < jumps_.size(); ++j) out.noalias() += jumps_[j] * rho * jumps_adj_[j];
  }

 private:
  int dim_;
  Matrix k_;
  Matrix k_adj_;
  std::vector<Matrix> jumps_;
  std::vector<Matrix> jumps_adj_;
};

Matrix ode_segment(const Matrix& rho, const Matrix& h, const std::vector<DenseOperator>& lindblads, double t) {
  if (t == 0.0) return rho;
  namespace ode = boost::numeric::odeint;
  using State = std::vector<cplx>;
  const auto n = rho.rows();
  State x(rho.data(), rho.data() + n * n);
  LindbladRhs rhs(h, lindblads);
  auto stepper = ode::make_controlled(1e-10, 1e-10, ode::runge_kutta_dopri5<State>());
  const double dt0 = std::min(t, 0.01);
  ode::integrate_adaptive(stepper, rhs, x, 0.0, t, dt0);
  return Eigen::Map<const Matrix>(x.data(), n, n);
}

}  // namespace

SwitchingProtocol SwitchingProtocol::from_durations(std::vector<double> durations, int n_hamiltonians) {
  if (n_hamiltonians < 1) throw InvalidArgument("n_hamiltonians must be positive");
  SwitchingProtocol p;
  p.total_time = abs_sum(durations);
  p.depth = static_cast<int>(durations.size()) / n_hamiltonians;
  p.durations = std::move(durations);
  p.validate(n_hamiltonians);
  return p;
}

SwitchingProtocol SwitchingProtocol::uniform(int depth, double total_time, int n_hamiltonians) {
  if (depth < 1 || n_hamiltonians < 1) throw InvalidArgument("depth and n_hamiltonians must be positive");
  const auto n = static_cast<std::size_t>(depth * n_hamiltonians);
  return {std::vector<double>(n, total_time / static_cast<double>(n)), depth, total_time};
}

void SwitchingProtocol::validate(int n_hamiltonians) const {
  if (static_cast<int>(durations.size()) != depth * n_hamiltonians) {
    throw DimensionError("protocol has " + std::to_string(durations.size()) + " durations, expected " +
                         std::to_string(depth * n_hamiltonians));
  }
  const double s = abs_sum(durations);
  if (std::abs(s - total_time) > 1e-9 * std::max(1.0, std::abs(total_time))) {
    throw InvalidArgument("durations sum to " + std::to_string(s) + ", total time is " + std::to_string(total_time));
  }
}

AmplitudeProtocol AmplitudeProtocol::alternating(const SwitchingProtocol& base) {
  AmplitudeProtocol amp;
  amp.base = base;
  amp.amplitudes.resize(base.durations.size());
  for (std::size_t i = 0; i < amp.amplitudes.size(); ++i) amp.amplitudes[i] = (i % 2 == 0) ? 1.0 : -1.0;
  return amp;
}

void AmplitudeProtocol::validate() const {
  if (amplitudes.size() != base.durations.size()) {
    throw DimensionError("amplitude count does not match the number of segments");
  }
  if (!(lower < upper)) throw InvalidArgument("amplitude bounds are empty");
  for (double c : amplitudes) {
    if (c < lower - 1e-12 || c > upper + 1e-12) throw InvalidArgument("amplitude outside bounds");
  }
}

SwitchingPropagator::SwitchingPropagator(const SwitchingAnsatz& ansatz) : dim_(ansatz.dim()) {
  if (ansatz.size() == 0) throw InvalidArgument("ansatz has no Hamiltonians");
  for (const auto& h : ansatz.hamiltonians) {
    if (!h.is_hermitian(1e-9)) throw NotHermitianError("ansatz Hamiltonian is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (h.matrix() + h.matrix().adjoint()));
    eigenvalues_.push_back(eig.eigenvalues());
    eigenvectors_.push_back(eig.eigenvectors());
  }
  const std::size_t k = eigenvectors_.size();
  for (std::size_t j = 0; j < k; ++j) {
    transitions_.push_back(eigenvectors_[(j + 1) % k].adjoint() * eigenvectors_[j]);
  }
}

Matrix SwitchingPropagator::unitary(std::span<const double> durations) const {
  if (durations.empty()) return Matrix::Identity(dim_, dim_);
  const std::size_t k = eigenvalues_.size();
  Matrix m = eigenvectors_[0].adjoint();
  Matrix scratch(dim_, dim_);
  Vector phases(dim_);
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const std::size_t h = i % k;
    const double t = std::abs(durations[i]);
    for (int j = 0; j < dim_; ++j) phases(j) = std::polar(1.0, -eigenvalues_[h](j) * t);
    m = phases.asDiagonal() * m;
    if (i + 1 < durations.size()) {
      scratch.noalias() = transitions_[h] * m;
      m.swap(scratch);
    }
  }
  return eigenvectors_[(durations.size() - 1) % k] * m;
}

PropagationResult propagate_switching(const SwitchingAnsatz& ansatz, const SwitchingProtocol& protocol,
                                      bool cache_steps) {
  check_schedule_dims(ansatz, protocol);
  const auto dims = ansatz.drift.site_dims();
  if (!cache_steps) {
    SwitchingPropagator prop(ansatz);
    return {DenseOperator(prop.unitary(protocol.durations), dims), {}};
  }
  PropagationResult result{DenseOperator::identity(dims), {}};
  const std::size_t k = ansatz.size();
  Matrix u = Matrix::Identity(ansatz.dim(), ansatz.dim());
  for (std::size_t i = 0; i < protocol.durations.size(); ++i) {
    DenseOperator step = expm_hermitian_propagator(ansatz.hamiltonians[i % k], std::abs(protocol.durations[i]));
    u = step.matrix() * u;
    result.step_unitaries.push_back(std::move(step));
  }
  result.final_operator = DenseOperator(std::move(u), dims);
  return result;
}

PropagationResult propagate_amplitudes(const SwitchingAnsatz& ansatz, const AmplitudeProtocol& amp,
                                       bool cache_steps) {
  if (ansatz.controls.size() != 1) {
    throw InvalidArgument("amplitude protocols need an ansatz with exactly one control generator");
  }
  amp.validate();
  check_schedule_dims(ansatz, amp.base);
  const auto dims = ansatz.drift.site_dims();
  PropagationResult result;
  Matrix u = Matrix::Identity(ansatz.dim(), ansatz.dim());
  for (std::size_t i = 0; i < amp.amplitudes.size(); ++i) {
    const DenseOperator h = ansatz.drift + amp.amplitudes[i] * ansatz.controls[0];
    DenseOperator step = expm_hermitian_propagator(h, std::abs(amp.base.durations[i]));
    u = step.matrix() * u;
    if (cache_steps) result.step_unitaries.push_back(std::move(step));
  }
  result.final_operator = DenseOperator(std::move(u), dims);
  return result;
}

HamiltonianSchedule switching_schedule(const SwitchingAnsatz& ansatz, const SwitchingProtocol& protocol) {
  check_schedule_dims(ansatz, protocol);
  HamiltonianSchedule schedule;
  for (std::size_t i = 0; i < protocol.durations.size(); ++i) {
    schedule.push_back({ansatz.hamiltonians[i % ansatz.size()], std::abs(protocol.durations[i])});
  }
  return schedule;
}

Matrix liouvillian(const DenseOperator& h, const std::vector<DenseOperator>& lindblads) {
  const int n = h.dim();
  check_dim_cap(n * n);
  const cplx i(0.0, 1.0);
  const Matrix id = Matrix::Identity(n, n);
  auto kron_m = [](const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    }
    return out;
  };
  Matrix l = -i * (kron_m(id, h.matrix()) - kron_m(h.matrix().transpose(), id));
  for (const auto& op : lindblads) {
    if (op.dim() != n) throw DimensionError("Lindblad operator dimension mismatch");
    const Matrix& a = op.matrix();
    const Matrix ada = a.adjoint() * a;
    l += kron_m(a.conjugate(), a) - 0.5 * kron_m(id, ada) - 0.5 * kron_m(ada.transpose(), id);
  }
  return l;
}

Matrix vectorize(const Matrix& rho) { return Eigen::Map<const Vector>(rho.data(), rho.size()); }

Matrix unvectorize(const Matrix& v, int dim) { return Eigen::Map<const Matrix>(v.data(), dim, dim); }

DensityMatrix lindblad_propagate(const HamiltonianSchedule& schedule, const std::vector<DenseOperator>& lindblads,
                                 const DensityMatrix& rho0, LindbladMethod method) {
  const int n = rho0.dim();
  for (const auto& seg : schedule) {
    if (seg.duration < 0.0) throw InvalidArgument("negative segment duration");
    if (seg.hamiltonian.dim() != n) throw DimensionError("schedule Hamiltonian does not match the state");
  }
  if (method == LindbladMethod::automatic) {
    method = qubit_count(n) <= kSuperopMaxSites ? LindbladMethod::superop : LindbladMethod::ode;
  }
  Matrix rho = rho0.op().matrix();
  if (method == LindbladMethod::superop) {
    Matrix v = vectorize(rho);
    for (const auto& seg : schedule) {
      if (seg.duration == 0.0) continue;
      v = expm(liouvillian(seg.hamiltonian, lindblads) * seg.duration) * v;
    }
    rho = unvectorize(v, n);
  } else {
    for (const auto& seg : schedule) rho = ode_segment(rho, seg.hamiltonian.matrix(), lindblads, seg.duration);
  }
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(DenseOperator(rho, rho0.op().site_dims()), 1e-7);
}

LindbladPropagator::LindbladPropagator(const SwitchingAnsatz& ansatz, std::vector<DenseOperator> lindblads,
                                       LindbladMethod method)
    : dim_(ansatz.dim()), hamiltonians_(ansatz.hamiltonians), lindblads_(std::move(lindblads)) {
  if (method == LindbladMethod::automatic) {
    method = qubit_count(dim_) <= kSuperopMaxSites ? LindbladMethod::superop : LindbladMethod::ode;
  }
  superop_ = method == LindbladMethod::superop;
  if (!superop_) return;
  for (const auto& h : hamiltonians_) {
    Generator g;
    g.liouvillian = liouvillian(h, lindblads_);
    Eigen::ComplexEigenSolver<Matrix> eig(g.liouvillian);
    if (eig.info() == Eigen::Success) {
      const Matrix& v = eig.eigenvectors();
      const Matrix vinv = v.partialPivLu().inverse();
      const double scale = std::max(1.0, g.liouvillian.cwiseAbs().maxCoeff());
      const double residual = (g.liouvillian * v - v * eig.eigenvalues().asDiagonal()).cwiseAbs().maxCoeff() / scale;
      const auto d = g.liouvillian.rows();
      const double inverse_err = (v * vinv - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
      if (residual < 1e-11 && inverse_err < 1e-9 && vinv.cwiseAbs().maxCoeff() < 1e6) {
        g.diagonalized = true;
        g.eigenvalues = eig.eigenvalues();
        g.eigenvectors = v;
        g.inverse = vinv;
      }
    }
    generators_.push_back(std::move(g));
  }
}

std::vector<Matrix> LindbladPropagator::evolve(const std::vector<Matrix>& rho0, std::span<const double> durations) const {
  const std::size_t k = hamiltonians_.size();
  if (!superop_) {
    std::vector<Matrix> out;
    for (const auto& r : rho0) {
      Matrix rho = r;
      for (std::size_t i = 0; i < durations.size(); ++i) {
        rho = ode_segment(rho, hamiltonians_[i % k].matrix(), lindblads_, std::abs(durations[i]));
      }
      out.push_back(std::move(rho));
    }
    return out;
  }
  Matrix block(dim_ * dim_, static_cast<Eigen::Index>(rho0.size()));
  for (std::size_t j = 0; j < rho0.size(); ++j) block.col(static_cast<Eigen::Index>(j)) = vectorize(rho0[j]);
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const Generator& g = generators_[i % k];
    const double t = std::abs(durations[i]);
    if (t == 0.0) continue;
    if (g.diagonalized) {
      Vector phases = (g.eigenvalues * t).array().exp();
      block = g.eigenvectors * (phases.asDiagonal() * (g.inverse * block));
    } else {
      block = expm(g.liouvillian * t) * block;
    }
  }
  std::vector<Matrix> out;
  for (Eigen::Index j = 0; j < block.cols(); ++j) out.push_back(unvectorize(block.col(j), dim_));
  return out;
}

std::vector<double> reduced_dynamics_no_control(const SpinSystemSpec& spec, std::span<const double> t_grid) {
  if (spec.total_bath() < 1) throw InvalidArgument("reduced dynamics needs at least one bath spin");
  const StaticHamiltonians hs = build_static_hamiltonians(spec);
  const Matrix h = (hs.system + hs.environment + hs.interaction).matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (h + h.adjoint()));
  const Matrix& v = eig.eigenvectors();
  const int n_bath_states = 1 << spec.total_bath();
  // System in |0...0> occupies the first n_bath_states basis indices.
  const Matrix initial_coeffs = v.adjoint().leftCols(n_bath_states);
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    Vector phases(v.rows());
    for (Eigen::Index j = 0; j < v.rows(); ++j) phases(j) = std::polar(1.0, -eig.eigenvalues()(j) * t);
    const Matrix psi = v.topRows(n_bath_states) * (phases.asDiagonal() * initial_coeffs);
    out.push_back(psi.squaredNorm() / n_bath_states);
  }
  return out;
}

LindbladMethod parse_lindblad_method(std::string_view s) {
  if (s == "superop") return LindbladMethod::superop;
  if (s == "ode") return LindbladMethod::ode;
  if (s == "auto") return LindbladMethod::automatic;
  throw InvalidArgument("unknown Lindblad method '" + std::string(s) + "'");
}

std::string to_string(LindbladMethod method) {
  switch (method) {
    case LindbladMethod::superop: return "superop";
    case LindbladMethod::ode: return "ode";
    case LindbladMethod::automatic: return "auto";
  }
  return "unknown";
}

}  // namespace hswitch
