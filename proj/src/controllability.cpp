#include "hswitch/controllability.hpp"

#include "hswitch/errors.hpp"

#include <cmath>

namespace hswitch {

namespace {

// Real Hilbert-Schmidt inner product; real for skew-Hermitian pairs.
double hs_inner(const Matrix& a, const Matrix& b) { return (a.conjugate().cwiseProduct(b)).sum().real(); }

Matrix orthogonal_part(const std::vector<DenseOperator>& basis, const Matrix& m) {
  Matrix v = m;
  // Two passes keep the basis orthogonal to roundoff.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) v -= hs_inner(b.matrix(), v) * b.matrix();
  }
  return v;
}

}  // namespace

double LieAlgebraBasis::span_residual(const DenseOperator& op) const {
  const double n = op.matrix().norm();
  if (n == 0.0) return 0.0;
  return orthogonal_part(orthonormal_basis, op.matrix()).norm() / n;
}

bool LieAlgebraBasis::contains(const DenseOperator& op, double tol) const { return span_residual(op) <= tol; }

std::vector<DenseOperator> skew_generators(const std::vector<DenseOperator>& hermitian) {
  std::vector<DenseOperator> out;
  for (const auto& h : hermitian) {
    if (!h.is_hermitian(1e-9)) throw NotHermitianError("skew_generators: input is not Hermitian");
    out.push_back(cplx(0.0, 1.0) * h);
  }
  return out;
}

LieAlgebraBasis lie_closure(const std::vector<DenseOperator>& generators, int max_dim) {
  LieAlgebraBasis out;
  out.generators = generators;
  if (generators.empty()) {
    out.closed = true;
    return out;
  }
  const auto dims = generators.front().site_dims();
  for (const auto& g : generators) {
    if (g.dim() != generators.front().dim()) throw DimensionError("generators differ in dimension");
    if ((g.matrix() + g.matrix().adjoint()).cwiseAbs().maxCoeff() > 1e-9) {
      throw InvalidArgument("lie_closure: generators must be skew-Hermitian");
    }
  }
  auto add = [&](const Matrix& m) {
    const double scale = std::max(1.0, m.norm());
    Matrix v = orthogonal_part(out.orthonormal_basis, m);
    v = 0.5 * (v - v.adjoint());
    const double nv = v.norm();
    if (nv <= kLieRankTolerance * scale) return;
    if (out.dimension() >= max_dim) throw Error("lie_closure: dimension exceeds max_dim without closing");
    out.orthonormal_basis.emplace_back(v / nv, dims);
  };
  for (const auto& g : generators) add(g.matrix());
  for (std::size_t j = 0; j < out.orthonormal_basis.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const Matrix a = out.orthonormal_basis[i].matrix();
      const Matrix b = out.orthonormal_basis[j].matrix();
      add(a * b - b * a);
    }
  }
  out.closed = true;
  return out;
}

bool subsystem_controllable(const LieAlgebraBasis& basis, int site) {
  if (!basis.closed) throw InvalidArgument("subsystem_controllable needs a closed basis");
  if (basis.orthonormal_basis.empty()) return false;
  const int n = basis.orthonormal_basis.front().num_sites();
  for (auto axis : {PauliAxis::x, PauliAxis::y, PauliAxis::z}) {
    if (!basis.contains(cplx(0.0, 1.0) * pauli_at(site, axis, n))) return false;
  }
  return true;
}

std::vector<double> recursion_step(RecursionScheme scheme, double g, double h, double eps,
                                   std::span<const double> r) {
  if (scheme == RecursionScheme::iso_lab) {
    if (r.size() != 6) throw DimensionError("iso_lab rows have 6 entries");
    const double e2 = eps * eps;
    return {
        -r[0] * (g * g + 1.0),
        -r[1] * (h * h + e2),
        -(h * h + g * g + e2) * r[2] - 2.0 * g * h * r[3] + g * r[4] + 2.0 * g * eps * r[5],
        -2.0 * g * h * r[2] - (h * h + g * g + 1.0) * r[3] + 2.0 * h * r[4] + h * eps * r[5],
        g * r[2] + 2.0 * h * r[3] - (1.0 + e2 + h * h) * r[4] - 2.0 * eps * r[5],
        2.0 * g * eps * r[2] + h * eps * r[3] - 2.0 * eps * r[4] - (1.0 + e2 + g * g) * r[5],
    };
  }
  if (r.size() != 4) throw DimensionError("dipole rows have 4 entries");
  return {
      r[0] * g * g + r[2] * g,
      r[1] * h * h + r[3] * h,
      r[0] * g + r[2] * (h * h + 1.0),
      r[1] * h + r[3] * (g * g + 1.0),
  };
}

RecursionTable build_recursion_table(RecursionScheme scheme, double g, double h, double eps, int s_max) {
  if (s_max < 1) throw InvalidArgument("s_max must be at least 1");
  RecursionTable t{scheme, g, h, eps, {}};
  switch (scheme) {
    case RecursionScheme::iso_lab:
      t.rows.push_back({2.0 * g * g, h * h * (1.0 + eps), g * h * (h - g), g * h * (g - h), g * h, g * h * eps});
      break;
    case RecursionScheme::dipole_rotating:
      t.rows.push_back({g * g, h * h, g * (h * h + 1.0), h * (g * g + 1.0)});
      break;
    case RecursionScheme::dipole_lab:
      t.rows.push_back({2.0 * g * g, h * h * (1.0 + eps), g * (h * h + 2.0), h * (g * g + 1.0 + eps)});
      break;
  }
  for (int s = 1; s < s_max; ++s) t.rows.push_back(recursion_step(scheme, g, h, eps, t.rows.back()));
  return t;
}

double recursion_determinant(const RecursionTable& table, std::span<const int> s_indices) {
  const int w = table.width();
  if (static_cast<int>(s_indices.size()) != w) {
    throw DimensionError("recursion_determinant needs " + std::to_string(w) + " orders");
  }
  Eigen::MatrixXd m(w, w);
  for (int r = 0; r < w; ++r) {
    const int s = s_indices[static_cast<std::size_t>(r)];
    if (s < 1 || s > static_cast<int>(table.rows.size())) throw InvalidArgument("recursion order out of range");
    const auto& row = table.rows[static_cast<std::size_t>(s - 1)];
    for (int c = 0; c < w; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    const double n = m.row(r).norm();
    if (n > 0.0) m.row(r) /= n;
  }
  return m.determinant();
}

double recursion_determinant(RecursionScheme scheme, double g, double h, double eps, std::span<const int> s_indices) {
  int s_max = 1;
  for (int s : s_indices) s_max = std::max(s_max, s);
  return recursion_determinant(build_recursion_table(scheme, g, h, eps, s_max), s_indices);
}

std::vector<std::string> recursion_operator_labels(RecursionScheme scheme) {
  switch (scheme) {
    case RecursionScheme::iso_lab: return {"IYI", "IIY", "IZY", "IYZ", "XXY", "XYX"};
    case RecursionScheme::dipole_rotating:
    case RecursionScheme::dipole_lab: return {"IZI", "IIZ", "XXI", "XIX"};
  }
  return {};
}

std::vector<ControllabilityRow> controllability_table(const std::vector<SpinSystemSpec>& specs) {
  std::vector<ControllabilityRow> rows;
  for (const auto& spec : specs) {
    if (spec.n_qubits != 1) throw InvalidArgument("controllability_table takes single-qubit systems");
    const SwitchingAnsatz ansatz = build_switching_ansatz(spec, AnsatzVariant::two_ham_x);
    const LieAlgebraBasis basis = lie_closure(skew_generators(ansatz.hamiltonians));
    ControllabilityRow row;
    row.coupling = spec.coupling_kind;
    row.frame = spec.frame;
    row.equal_couplings = true;
    for (double a : spec.couplings) row.equal_couplings = row.equal_couplings && a == spec.couplings.front();
    row.algebra_dimension = basis.dimension();
    row.qubit_controllable = subsystem_controllable(basis, 0);
    row.bath_controllable = spec.total_bath() > 0;
    for (int b = 0; b < spec.total_bath(); ++b) {
      row.bath_controllable = row.bath_controllable && subsystem_controllable(basis, 1 + b);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<SpinSystemSpec> standard_table_specs() {
  std::vector<SpinSystemSpec> specs;
  for (auto kind : {CouplingKind::isotropic, CouplingKind::dipole}) {
    for (auto frame : {Frame::rotating, Frame::lab}) {
      for (bool equal : {true, false}) {
        SpinSystemSpec s;
        s.bath_counts = {2};
        s.coupling_kind = kind;
        s.frame = frame;
        s.qubit_splittings = {1.0};
        s.couplings = equal ? std::vector<double>{1.0, 1.0} : std::vector<double>{1.3, 1.7};
        if (frame == Frame::lab) s.bath_splittings = {1.0, 1.1};
        specs.push_back(s);
      }
    }
  }
  return specs;
}

std::string to_string(RecursionScheme scheme) {
  switch (scheme) {
    case RecursionScheme::iso_lab: return "iso_lab";
    case RecursionScheme::dipole_rotating: return "dipole_rotating";
    case RecursionScheme::dipole_lab: return "dipole_lab";
  }
  return "unknown";
}

RecursionScheme parse_recursion_scheme(std::string_view s) {
  for (auto r : {RecursionScheme::iso_lab, RecursionScheme::dipole_rotating, RecursionScheme::dipole_lab}) {
    if (s == to_string(r)) return r;
  }
  throw InvalidArgument("unknown recursion scheme '" + std::string(s) + "'");
}

}  // namespace hswitch
