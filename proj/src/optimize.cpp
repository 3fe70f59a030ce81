#include "hswitch/optimize.hpp"

#include "hswitch/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <mutex>
#include <thread>

namespace hswitch {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-12;

struct SegmentEigen {
  Eigen::VectorXd values;
  Matrix vectors;
  Matrix unitary;
};

SegmentEigen segment_eigen(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (h + h.adjoint()));
  SegmentEigen s{eig.eigenvalues(), eig.eigenvectors(), {}};
  Vector phases(s.values.size());
  for (Eigen::Index j = 0; j < s.values.size(); ++j) phases(j) = std::polar(1.0, -s.values(j) * t);
  s.unitary = s.vectors * phases.asDiagonal() * s.vectors.adjoint();
  return s;
}

// d/dc exp(-i t (H0 + c Hc)) at the decomposed point.
Matrix segment_derivative(const SegmentEigen& s, const Matrix& hc, double t) {
  const auto n = s.values.size();
  const cplx i(0.0, 1.0);
  Matrix e = s.vectors.adjoint() * (-i * t * hc) * s.vectors;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double theta = -t * (s.values(j) - s.values(k));
      cplx phi;
      if (std::abs(theta) < 1e-8) {
        phi = cplx(1.0, theta / 2.0);
      } else {
        const double half = std::sin(theta / 2.0);
        phi = cplx(std::sin(theta) / theta, 2.0 * half * half / theta);
      }
      e(j, k) *= std::polar(1.0, -s.values(k) * t) * phi;
    }
  }
  return s.vectors * e * s.vectors.adjoint();
}

void check_amplitude_inputs(const SwitchingAnsatz& ansatz, const TargetGate& target,
                            std::span<const double> amplitudes, std::span<const double> durations) {
  if (ansatz.controls.size() != 1) {
    throw InvalidArgument("amplitude optimization needs an ansatz with exactly one control generator");
  }
  if (amplitudes.size() != durations.size()) throw DimensionError("amplitude and duration counts differ");
  if (ansatz.dim() % target.matrix.dim() != 0) throw DimensionError("target does not match the ansatz");
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

ProtocolObjective make_unitary_objective(const SwitchingAnsatz& ansatz, const TargetGate& target) {
  if (target.n_qubits() != ansatz.n_system_sites) throw DimensionError("target does not act on the system sites");
  auto prop = std::make_shared<const SwitchingPropagator>(ansatz);
  Matrix w = target.matrix.matrix();
  return [prop, w](std::span<const double> x) { return unitary_fidelity_value(prop->unitary(x), w); };
}

ProtocolObjective make_ref_state_objective(const SwitchingAnsatz& ansatz, const TargetGate& target,
                                           const std::vector<DenseOperator>& lindblads, LindbladMethod method) {
  if (target.n_qubits() != ansatz.n_system_sites) throw DimensionError("target does not act on the system sites");
  auto prop = std::make_shared<const LindbladPropagator>(ansatz, lindblads, method);
  const int d = target.matrix.dim();
  const int bath_dim = ansatz.dim() / d;
  std::vector<Matrix> inputs;
  for (const auto& r : reference_states(d)) inputs.push_back(attach_ground_bath(r, bath_dim));
  TargetGate w = target;
  return [prop, inputs, w, d](std::span<const double> x) {
    const std::vector<Matrix> evolved = prop->evolve(inputs, x);
    auto channel = [&](const std::vector<Matrix>&) {
      std::vector<Matrix> out;
      for (const auto& r : evolved) out.push_back(trace_out_bath(r, d));
      return out;
    };
    return reference_state_fidelity(channel, w, d).fidelity;
  };
}

void PGConfig::validate() const {
  if (iterations < 1) throw InvalidArgument("PG iterations must be at least 1");
  if (batch_size < 2) throw InvalidArgument("PG batch size must be at least 2");
  if (antithetic && batch_size % 2 != 0) throw InvalidArgument("antithetic sampling needs an even batch size");
  if (restarts < 1) throw InvalidArgument("PG restarts must be at least 1");
  if (depth < 1) throw InvalidArgument("depth must be at least 1");
  if (!(total_time > 0.0)) throw InvalidArgument("total time must be positive");
  if (!(lr_mean > 0.0) || !(lr_logstd >= 0.0)) throw InvalidArgument("PG step sizes must be positive");
  if (!(init_std_fraction > 0.0)) throw InvalidArgument("initial std must be positive");
  if (jobs < 1) throw InvalidArgument("jobs must be at least 1");
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void project_durations(std::span<double> x, double total_time) {
  double s = 0.0;
  for (double& v : x) {
    v = std::abs(v);
    s += v;
  }
  if (s <= 0.0 || !std::isfinite(s)) {
    std::fill(x.begin(), x.end(), total_time / static_cast<double>(x.size()));
    return;
  }
  for (double& v : x) v *= total_time / s;
}

PGRestartResult pg_run(const ProtocolObjective& objective, int n_hamiltonians, const PGConfig& cfg,
                       std::uint64_t seed) {
  cfg.validate();
  const int k = n_hamiltonians * cfg.depth;
  const double t = cfg.total_time;
  const double uniform = t / k;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::VectorXd mu(k);
  for (int j = 0; j < k; ++j) mu(j) = uniform * std::abs(1.0 + cfg.init_mean_jitter * gauss(rng));
  project_durations(std::span<double>(mu.data(), static_cast<std::size_t>(k)), t);
  Eigen::VectorXd log_std = Eigen::VectorXd::Constant(k, std::log(cfg.init_std_fraction * uniform));

  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(2 * k);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(2 * k);
  const int b = cfg.batch_size;
  Eigen::MatrixXd eps(b, k);
  Eigen::VectorXd reward(b);

  PGRestartResult out;
  out.seed = seed;
  out.trace.reserve(static_cast<std::size_t>(cfg.iterations));
  std::vector<double> best_x(mu.data(), mu.data() + k);
  double best = -1.0;
  std::vector<double> row(static_cast<std::size_t>(k));

  auto consider = [&](const std::vector<double>& x) {
    const double f = objective(x);
    if (f > best) {
      best = f;
      best_x = x;
    }
    return f;
  };

  for (int it = 0; it < cfg.iterations; ++it) {
    const Eigen::VectorXd sd = log_std.array().exp();
    if (cfg.antithetic) {
      for (int r = 0; r < b / 2; ++r) {
        for (int j = 0; j < k; ++j) eps(r, j) = gauss(rng);
      }
      eps.bottomRows(b / 2) = -eps.topRows(b / 2);
    } else {
      for (int r = 0; r < b; ++r) {
        for (int j = 0; j < k; ++j) eps(r, j) = gauss(rng);
      }
    }
    for (int r = 0; r < b; ++r) {
      for (int j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = mu(j) + sd(j) * eps(r, j);
      project_durations(row, t);
      reward(r) = mli(consider(row));
    }
    const double mean = reward.mean();
    const double spread = std::sqrt((reward.array() - mean).square().mean());
    const Eigen::VectorXd adv = (reward.array() - mean) / (spread + 1e-12);

    Eigen::VectorXd grad(2 * k);
    for (int j = 0; j < k; ++j) {
      double gm = 0.0;
      double gs = 0.0;
      for (int r = 0; r < b; ++r) {
        gm += adv(r) * eps(r, j);
        gs += adv(r) * (eps(r, j) * eps(r, j) - 1.0);
      }
      grad(j) = gm / (b * sd(j));
      grad(k + j) = gs / b;
    }
    m1 = kAdamBeta1 * m1 + (1.0 - kAdamBeta1) * grad;
    m2 = kAdamBeta2 * m2 + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(kAdamBeta1, it + 1);
    const double c2 = 1.0 - std::pow(kAdamBeta2, it + 1);
    const Eigen::VectorXd step = (m1 / c1).array() / ((m2 / c2).array().sqrt() + kAdamEps);
    mu += cfg.lr_mean * step.head(k).cwiseProduct(sd);
    log_std += cfg.lr_logstd * step.tail(k);
    project_durations(std::span<double>(mu.data(), static_cast<std::size_t>(k)), t);
    out.trace.push_back(best);
  }
  consider(std::vector<double>(mu.data(), mu.data() + k));
  if (!out.trace.empty()) out.trace.back() = best;

  out.protocol = SwitchingProtocol{best_x, cfg.depth, t};
  out.fidelity = best;
  return out;
}

PGResult pg_optimize(const ProtocolObjective& objective, int n_hamiltonians, const PGConfig& cfg, FidelityKind kind) {
  cfg.validate();
  PGResult result;
  result.restarts.resize(static_cast<std::size_t>(cfg.restarts));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (int r = next++; r < cfg.restarts; r = next++) {
      try {
        result.restarts[static_cast<std::size_t>(r)] =
            pg_run(objective, n_hamiltonians, cfg, split_seed(cfg.seed, static_cast<std::uint64_t>(r)));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(cfg.jobs, cfg.restarts);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (int r = 1; r < cfg.restarts; ++r) {
    if (result.restarts[static_cast<std::size_t>(r)].fidelity >
        result.restarts[static_cast<std::size_t>(result.best_restart)].fidelity) {
      result.best_restart = r;
    }
  }
  const auto& best = result.restarts[static_cast<std::size_t>(result.best_restart)];
  result.protocol = best.protocol;
  result.report = make_report(best.fidelity, kind);
  return result;
}

PGResult pg_optimize(const SwitchingAnsatz& ansatz, const TargetGate& target, const PGConfig& cfg, FidelityKind kind,
                     const std::vector<DenseOperator>& lindblads) {
  switch (kind) {
    case FidelityKind::unitary:
      return pg_optimize(make_unitary_objective(ansatz, target), static_cast<int>(ansatz.size()), cfg, kind);
    case FidelityKind::ref_state:
      return pg_optimize(make_ref_state_objective(ansatz, target, lindblads), static_cast<int>(ansatz.size()), cfg,
                         kind);
    case FidelityKind::avg_state:
      break;
  }
  throw InvalidArgument("PG optimizes the unitary or reference-state fidelity only");
}

void GrapeConfig::validate() const {
  if (!(lower < upper)) throw InvalidArgument("GRAPE bounds are empty");
  if (lower > 1.0 || upper < 1.0 || lower > -1.0 || upper < -1.0) {
    throw InvalidArgument("GRAPE bounds must contain the initial amplitudes +/-1");
  }
  if (max_iterations < 0) throw InvalidArgument("max_iterations must be nonnegative");
  if (!(gradient_tolerance > 0.0)) throw InvalidArgument("gradient tolerance must be positive");
  if (!(check_tolerance > 0.0)) throw InvalidArgument("check tolerance must be positive");
}

double amplitude_fidelity(const SwitchingAnsatz& ansatz, const TargetGate& target, std::span<const double> amplitudes,
                          std::span<const double> durations) {
  check_amplitude_inputs(ansatz, target, amplitudes, durations);
  const Matrix& h0 = ansatz.drift.matrix();
  const Matrix& hc = ansatz.controls[0].matrix();
  Matrix u = Matrix::Identity(ansatz.dim(), ansatz.dim());
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    u = segment_eigen(h0 + amplitudes[i] * hc, std::abs(durations[i])).unitary * u;
  }
  return unitary_fidelity_value(u, target.matrix.matrix());
}

double amplitude_gradient(const SwitchingAnsatz& ansatz, const TargetGate& target, std::span<const double> amplitudes,
                          std::span<const double> durations, std::vector<double>& gradient) {
  check_amplitude_inputs(ansatz, target, amplitudes, durations);
  const Matrix& h0 = ansatz.drift.matrix();
  const Matrix& hc = ansatz.controls[0].matrix();
  const int n = ansatz.dim();
  const std::size_t k = amplitudes.size();

  std::vector<SegmentEigen> segs;
  segs.reserve(k);
  // prefix[i] = U_{i-1} ... U_0
  std::vector<Matrix> prefix;
  prefix.reserve(k + 1);
  prefix.push_back(Matrix::Identity(n, n));
  for (std::size_t i = 0; i < k; ++i) {
    segs.push_back(segment_eigen(h0 + amplitudes[i] * hc, std::abs(durations[i])));
    prefix.push_back(segs.back().unitary * prefix.back());
  }
  const Matrix& u = prefix.back();
  const Matrix& w = target.matrix.matrix();
  const Matrix q = overlap_operator(u, w);
  const Matrix p = polar_unitary_factor(q);
  const double tn = trace_norm(q);
  const double nd = static_cast<double>(n);

  // M = (W kron P)^dagger; F changes by 2 tn / N^2 * Re tr(M dU).
  const auto ns = w.rows();
  const auto nb = p.rows();
  Matrix m(n, n);
  for (Eigen::Index a = 0; a < ns; ++a) {
    for (Eigen::Index c = 0; c < ns; ++c) m.block(a * nb, c * nb, nb, nb) = std::conj(w(c, a)) * p.adjoint();
  }

  gradient.assign(k, 0.0);
  Matrix suffix = m;  // M U_{k-1} ... U_{i+1}
  for (std::size_t idx = k; idx-- > 0;) {
    const Matrix x = prefix[idx] * suffix;
    const Matrix du = segment_derivative(segs[idx], hc, std::abs(durations[idx]));
    gradient[idx] = 2.0 * tn / (nd * nd) * x.transpose().cwiseProduct(du).sum().real();
    suffix = suffix * segs[idx].unitary;
  }
  return std::clamp((tn / nd) * (tn / nd), 0.0, 1.0);
}

std::vector<double> amplitude_gradient_fd(const SwitchingAnsatz& ansatz, const TargetGate& target,
                                          std::span<const double> amplitudes, std::span<const double> durations,
                                          double h) {
  std::vector<double> c(amplitudes.begin(), amplitudes.end());
  std::vector<double> g(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double c0 = c[i];
    c[i] = c0 + h;
    const double fp = amplitude_fidelity(ansatz, target, c, durations);
    c[i] = c0 - h;
    const double fm = amplitude_fidelity(ansatz, target, c, durations);
    c[i] = c0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

GrapeResult grape_refine(const SwitchingAnsatz& ansatz, const SwitchingProtocol& base, const TargetGate& target,
                         const GrapeConfig& cfg) {
  cfg.validate();
  if (ansatz.size() != 2) throw InvalidArgument("GRAPE refinement needs a two-Hamiltonian ansatz");
  base.validate(2);
  GrapeResult result;
  result.amplitudes = AmplitudeProtocol::alternating(base);
  result.amplitudes.lower = cfg.lower;
  result.amplitudes.upper = cfg.upper;
  const std::vector<double>& dur = base.durations;
  const std::size_t k = dur.size();
  std::vector<double> c = result.amplitudes.amplitudes;

  bool use_fd = false;
  auto evaluate = [&](const std::vector<double>& x, std::vector<double>& g) {
    if (!use_fd) {
      try {
        return amplitude_gradient(ansatz, target, x, dur, g);
      } catch (const SingularMatrixError&) {
        use_fd = true;
        result.finite_difference_fallback = true;
      }
    }
    g = amplitude_gradient_fd(ansatz, target, x, dur);
    return amplitude_fidelity(ansatz, target, x, dur);
  };

  std::vector<double> g;
  double f = evaluate(c, g);
  result.initial = make_report(f, FidelityKind::unitary);

  if (cfg.check_gradient && !use_fd) {
    const std::vector<double> g_fd = amplitude_gradient_fd(ansatz, target, c, dur);
    double diff = 0.0;
    for (std::size_t i = 0; i < k; ++i) diff = std::max(diff, std::abs(g[i] - g_fd[i]));
    result.gradient_check_error = diff / std::max(inf_norm(g_fd), 1e-5);
    if (result.gradient_check_error > cfg.check_tolerance) {
      std::ostringstream msg;
      msg << "analytic amplitude gradient disagrees with finite differences: relative error "
          << result.gradient_check_error << " (max |analytic - fd| = " << diff << ", |fd|_inf = " << inf_norm(g_fd)
          << ", segments = " << k << ")";
      throw GradientCheckError(msg.str());
    }
  }

  // Minimize phi = log10(1 - F); gradient -dF / ((1 - F) ln 10).
  static constexpr double kFloor = 1e-16;
  auto phi_of = [](double fid) { return std::log10(std::max(1.0 - fid, kFloor)); };
  auto phi_grad = [](double fid, const std::vector<double>& dF) {
    const double scale = -1.0 / (std::max(1.0 - fid, kFloor) * std::log(10.0));
    std::vector<double> out(dF.size());
    for (std::size_t i = 0; i < dF.size(); ++i) out[i] = scale * dF[i];
    return out;
  };
  auto projected_grad_norm = [&](const std::vector<double>& x, const std::vector<double>& dF) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      // Ascent direction for F is +dF; blocked at an active bound.
      if ((x[i] >= cfg.upper && dF[i] > 0.0) || (x[i] <= cfg.lower && dF[i] < 0.0)) continue;
      m = std::max(m, std::abs(dF[i]));
    }
    return m;
  };

  const auto kk = static_cast<Eigen::Index>(k);
  // Inverse Hessian approximation, restarted as gamma * I whenever the active
  // set changes or the update loses positivity.
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(kk, kk);
  double gamma = 1.0;
  bool fresh = true;
  std::vector<bool> prev_active(k, false);
  double phi = phi_of(f);
  std::vector<double> gphi = phi_grad(f, g);
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    if (projected_grad_norm(c, g) <= cfg.gradient_tolerance || 1.0 - f <= kFloor) break;
    std::vector<bool> active(k, false);
    for (std::size_t i = 0; i < k; ++i) {
      active[i] = (c[i] >= cfg.upper && gphi[i] < 0.0) || (c[i] <= cfg.lower && gphi[i] > 0.0);
    }
    // Variables entering or leaving the active set are decoupled from the
    // rest of the inverse Hessian instead of restarting it.
    for (std::size_t i = 0; i < k; ++i) {
      if (active[i] == prev_active[i]) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      hinv.row(ii).setZero();
      hinv.col(ii).setZero();
      hinv(ii, ii) = active[i] ? 0.0 : gamma;
    }
    prev_active = active;
    Eigen::VectorXd gv(kk);
    for (std::size_t i = 0; i < k; ++i) gv(static_cast<Eigen::Index>(i)) = active[i] ? 0.0 : gphi[i];
    Eigen::VectorXd d = -(hinv * gv);
    for (std::size_t i = 0; i < k; ++i) {
      if (active[i]) d(static_cast<Eigen::Index>(i)) = 0.0;
    }
    if (d.dot(gv) >= 0.0) {
      hinv = gamma * Eigen::MatrixXd::Identity(kk, kk);
      fresh = true;
      d = -gamma * gv;
    }

    // Strong-Wolfe search along the projected path c(a) = clamp(c + a d).
    std::vector<double> trial(k);
    std::vector<double> g_trial;
    double f_trial = f;
    auto probe = [&](double a, double& phi_a, double& dphi_a) {
      for (std::size_t i = 0; i < k; ++i) {
        trial[i] = std::clamp(c[i] + a * d(static_cast<Eigen::Index>(i)), cfg.lower, cfg.upper);
      }
      f_trial = evaluate(trial, g_trial);
      phi_a = phi_of(f_trial);
      const std::vector<double> gp = phi_grad(f_trial, g_trial);
      dphi_a = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double raw = c[i] + a * d(static_cast<Eigen::Index>(i));
        if (raw > cfg.lower && raw < cfg.upper) dphi_a += gp[i] * d(static_cast<Eigen::Index>(i));
      }
    };
    const double dphi0 = gv.dot(d);
    constexpr double c1 = 1e-4;
    constexpr double c2 = 0.9;
    bool accepted = false;
    double a_prev = 0.0;
    double phi_prev = phi;
    double dphi_prev = dphi0;
    double a = fresh ? std::min(1.0, 0.1 / std::max(d.cwiseAbs().maxCoeff(), 1e-300)) : 1.0;
    double lo = 0.0, hi = 0.0, phi_lo = phi, dphi_lo = dphi0;
    bool bracketed = false;
    for (int ls = 0; ls < 30; ++ls) {
      double phi_a = 0.0;
      double dphi_a = 0.0;
      probe(a, phi_a, dphi_a);
      if (!std::isfinite(phi_a) || phi_a > phi + c1 * a * dphi0 || (ls > 0 && phi_a >= phi_prev)) {
        lo = a_prev, phi_lo = phi_prev, dphi_lo = dphi_prev, hi = a;
        bracketed = true;
        break;
      }
      if (std::abs(dphi_a) <= -c2 * dphi0) {
        accepted = true;
        break;
      }
      if (dphi_a >= 0.0) {
        lo = a, phi_lo = phi_a, dphi_lo = dphi_a, hi = a_prev;
        bracketed = true;
        break;
      }
      a_prev = a, phi_prev = phi_a, dphi_prev = dphi_a;
      a *= 2.0;
    }
    if (bracketed) {
      for (int z = 0; z < 40; ++z) {
        double aj = 0.5 * (lo + hi);
        double phi_a = 0.0;
        double dphi_a = 0.0;
        probe(aj, phi_a, dphi_a);
        if (!std::isfinite(phi_a) || phi_a > phi + c1 * aj * dphi0 || phi_a >= phi_lo) {
          hi = aj;
        } else {
          if (std::abs(dphi_a) <= -c2 * dphi0) {
            accepted = true;
            break;
          }
          if (dphi_a * (hi - lo) >= 0.0) hi = lo;
          lo = aj, phi_lo = phi_a, dphi_lo = dphi_a;
        }
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
      }
      // Fall back to the best sufficient-decrease point found.
      if (!accepted && lo > 0.0) {
        double phi_a = 0.0;
        double dphi_a = 0.0;
        probe(lo, phi_a, dphi_a);
        accepted = phi_a < phi;
      }
    }
    (void)dphi_lo;
    accepted = accepted && f_trial > f;
    if (!accepted) {
      if (fresh) break;
      hinv = gamma * Eigen::MatrixXd::Identity(kk, kk);
      fresh = true;
      continue;
    }
    const std::vector<double> gphi_new = phi_grad(f_trial, g_trial);
    Eigen::VectorXd s(kk);
    Eigen::VectorXd y(kk);
    for (std::size_t i = 0; i < k; ++i) {
      s(static_cast<Eigen::Index>(i)) = trial[i] - c[i];
      y(static_cast<Eigen::Index>(i)) = active[i] ? 0.0 : gphi_new[i] - gphi[i];
    }
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) {
        gamma = sy / y.squaredNorm();
        hinv = gamma * Eigen::MatrixXd::Identity(kk, kk);
        fresh = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(kk, kk);
      hinv = (id - rho * s * y.transpose()) * hinv * (id - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    c = trial;
    g = g_trial;
    f = f_trial;
    phi = phi_of(f);
    gphi = gphi_new;
  }
  result.iterations = it;
  result.amplitudes.amplitudes = c;
  result.report = make_report(f, FidelityKind::unitary);
  return result;
}

LandscapeDiagnostics landscape_diagnostics(const ProtocolObjective& objective, const SwitchingProtocol& protocol) {
  if (protocol.depth < 1) throw InvalidArgument("protocol depth must be positive");
  const double h = 1e-5 * protocol.total_time / protocol.depth;
  std::vector<double> x = protocol.durations;
  const std::size_t k = x.size();
  for (double v : x) {
    if (!(v > 2.0 * h)) throw InvalidArgument("landscape diagnostics need an interior protocol (all durations > 2h)");
  }
  LandscapeDiagnostics out;
  const double f0 = objective(x);
  out.fidelity = f0;
  auto f_at = [&](std::size_t i, double di, std::size_t j, double dj) {
    std::vector<double> y = x;
    y[i] += di;
    y[j] += dj;
    return objective(y);
  };
  std::vector<double> fp(k);
  std::vector<double> fm(k);
  out.gradient.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> y = x;
    y[i] = x[i] + h;
    fp[i] = objective(y);
    y[i] = x[i] - h;
    fm[i] = objective(y);
    out.gradient[i] = (fp[i] - fm[i]) / (2.0 * h);
  }
  out.grad_inf_norm = inf_norm(out.gradient);

  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd hess(kk, kk);
  for (std::size_t i = 0; i < k; ++i) {
    hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = (fp[i] - 2.0 * f0 + fm[i]) / (h * h);
    for (std::size_t j = i + 1; j < k; ++j) {
      const double v = (f_at(i, h, j, h) - f_at(i, h, j, -h) - f_at(i, -h, j, h) + f_at(i, -h, j, -h)) / (4.0 * h * h);
      hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  hess = 0.5 * (hess + hess.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess, Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < kk; ++i) {
    const double lam = eig.eigenvalues()(i);
    out.hessian_eigenvalues.push_back(lam);
    if (std::abs(lam) < kHessianZeroThreshold) {
      ++out.n_zero;
    } else if (lam > 0.0) {
      ++out.n_positive;
    } else {
      ++out.n_negative;
    }
  }
  return out;
}

LandscapeDiagnostics landscape_diagnostics(const SwitchingAnsatz& ansatz, const SwitchingProtocol& protocol,
                                           const TargetGate& target) {
  protocol.validate(static_cast<int>(ansatz.size()));
  return landscape_diagnostics(make_unitary_objective(ansatz, target), protocol);
}

}  // namespace hswitch
