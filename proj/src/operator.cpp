#include "hswitch/operator.hpp"

#include "hswitch/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace hswitch {

namespace {

int product(const std::vector<int>& dims) {
  return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
}

void require_same_shape(const DenseOperator& a, const DenseOperator& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw DimensionError(std::string(what) + ": dimension mismatch " + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()));
  }
}

}  // namespace

void check_dim_cap(int dim) {
  if (dim > kMaxDim) {
    throw DimensionError("operator dimension " + std::to_string(dim) + " exceeds cap " +
                         std::to_string(kMaxDim));
  }
}

DenseOperator::DenseOperator(Matrix entries, std::vector<int> site_dims)
    : entries_(std::move(entries)), site_dims_(std::move(site_dims)) {
  if (entries_.rows() != entries_.cols()) throw DimensionError("operator must be square");
  check_dim_cap(static_cast<int>(entries_.rows()));
  for (int d : site_dims_) {
    if (d < 1) throw DimensionError("site dimensions must be positive");
  }
  if (product(site_dims_) != entries_.rows()) {
    throw DimensionError("product of site dimensions " + std::to_string(product(site_dims_)) +
                         " does not match operator dimension " + std::to_string(entries_.rows()));
  }
}

DenseOperator::DenseOperator(Matrix entries)
    : DenseOperator(entries, std::vector<int>{static_cast<int>(entries.rows())}) {}

DenseOperator DenseOperator::identity(std::vector<int> site_dims) {
  const int n = product(site_dims);
  return DenseOperator(Matrix::Identity(n, n), std::move(site_dims));
}

DenseOperator DenseOperator::zero(std::vector<int> site_dims) {
  const int n = product(site_dims);
  return DenseOperator(Matrix::Zero(n, n), std::move(site_dims));
}

DenseOperator DenseOperator::qubits_identity(int n_sites) {
  return identity(std::vector<int>(static_cast<std::size_t>(n_sites), 2));
}

DenseOperator DenseOperator::adjoint() const { return {entries_.adjoint(), site_dims_}; }

bool DenseOperator::is_hermitian(double tol) const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool DenseOperator::is_unitary(double tol) const {
  const Matrix gram = entries_.adjoint() * entries_;
  return (gram - Matrix::Identity(dim(), dim())).norm() <= tol;
}

DenseOperator& DenseOperator::operator+=(const DenseOperator& other) {
  require_same_shape(*this, other, "operator+");
  entries_ += other.entries_;
  return *this;
}

DenseOperator& DenseOperator::operator-=(const DenseOperator& other) {
  require_same_shape(*this, other, "operator-");
  entries_ -= other.entries_;
  return *this;
}

DenseOperator& DenseOperator::operator*=(cplx scale) {
  entries_ *= scale;
  return *this;
}

DenseOperator operator*(const DenseOperator& a, const DenseOperator& b) {
  require_same_shape(a, b, "operator*");
  return {a.entries_ * b.entries_, a.site_dims_};
}

DensityMatrix::DensityMatrix(DenseOperator rho, double tol) : rho_(std::move(rho)) {
  if (std::abs(rho_.trace() - cplx(1.0, 0.0)) > tol) {
    throw InvalidArgument("density matrix trace deviates from 1");
  }
  if (!rho_.is_hermitian(tol)) throw InvalidArgument("density matrix is not Hermitian");
  const Matrix herm = 0.5 * (rho_.matrix() + rho_.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(herm, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -tol) {
    throw InvalidArgument("density matrix has a negative eigenvalue");
  }
}

DensityMatrix DensityMatrix::pure(const Vector& psi, std::vector<int> site_dims) {
  return DensityMatrix(DenseOperator(psi * psi.adjoint(), std::move(site_dims)));
}

double distance(const DenseOperator& a, const DenseOperator& b) {
  require_same_shape(a, b, "distance");
  return (a.matrix() - b.matrix()).norm();
}

DenseOperator kron(const DenseOperator& a, const DenseOperator& b) {
  const int na = a.dim();
  const int nb = b.dim();
  check_dim_cap(na * nb);
  Matrix out(na * nb, na * nb);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < na; ++j) {
      out.block(i * nb, j * nb, nb, nb) = a(i, j) * b.matrix();
    }
  }
  std::vector<int> dims = a.site_dims();
  dims.insert(dims.end(), b.site_dims().begin(), b.site_dims().end());
  return {std::move(out), std::move(dims)};
}

DenseOperator partial_trace(const DenseOperator& op, std::span<const int> keep) {
  const auto& dims = op.site_dims();
  const int n_sites = op.num_sites();
  std::vector<bool> kept(static_cast<std::size_t>(n_sites), false);
  for (int s : keep) {
    if (s < 0 || s >= n_sites) {
      throw DimensionError("partial_trace: site index " + std::to_string(s) + " out of range");
    }
    if (kept[static_cast<std::size_t>(s)]) throw InvalidArgument("partial_trace: site listed twice");
    kept[static_cast<std::size_t>(s)] = true;
  }

  std::vector<int> kept_dims;
  std::vector<int> traced_dims;
  for (int s = 0; s < n_sites; ++s) {
    (kept[static_cast<std::size_t>(s)] ? kept_dims : traced_dims).push_back(dims[static_cast<std::size_t>(s)]);
  }
  const int dk = product(kept_dims);
  const int dt = product(traced_dims);
  if (kept_dims.empty()) kept_dims.push_back(1);

  // Map (kept index, traced index) -> full index, site 0 most significant.
  std::vector<int> full_index(static_cast<std::size_t>(dk * dt));
  {
    std::vector<int> digits(static_cast<std::size_t>(n_sites));
    for (int f = 0; f < op.dim(); ++f) {
      int rem = f;
      for (int s = n_sites - 1; s >= 0; --s) {
        digits[static_cast<std::size_t>(s)] = rem % dims[static_cast<std::size_t>(s)];
        rem /= dims[static_cast<std::size_t>(s)];
      }
      int ik = 0;
      int it = 0;
      for (int s = 0; s < n_sites; ++s) {
        const int d = dims[static_cast<std::size_t>(s)];
        if (kept[static_cast<std::size_t>(s)]) {
          ik = ik * d + digits[static_cast<std::size_t>(s)];
        } else {
          it = it * d + digits[static_cast<std::size_t>(s)];
        }
      }
      full_index[static_cast<std::size_t>(ik * dt + it)] = f;
    }
  }

  const Matrix& m = op.matrix();
  Matrix out = Matrix::Zero(dk, dk);
  for (int i = 0; i < dk; ++i) {
    for (int j = 0; j < dk; ++j) {
      cplx acc = 0.0;
      for (int t = 0; t < dt; ++t) {
        acc += m(full_index[static_cast<std::size_t>(i * dt + t)],
                 full_index[static_cast<std::size_t>(j * dt + t)]);
      }
      out(i, j) = acc;
    }
  }
  return {std::move(out), std::move(kept_dims)};
}

DenseOperator partial_trace(const DenseOperator& op, std::initializer_list<int> keep) {
  return partial_trace(op, std::span<const int>(keep.begin(), keep.size()));
}

DenseOperator expm_hermitian_propagator(const DenseOperator& h, double t) {
  if (!h.is_hermitian(1e-9)) throw NotHermitianError("expm_hermitian_propagator: input is not Hermitian");
  const Matrix herm = 0.5 * (h.matrix() + h.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(herm);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  Vector phases(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) phases(k) = std::polar(1.0, -lambda(k) * t);
  const Matrix& v = eig.eigenvectors();
  return {v * phases.asDiagonal() * v.adjoint(), h.site_dims()};
}

Matrix expm(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("expm: matrix must be square");
  const Eigen::Index n = m.rows();
  const Matrix id = Matrix::Identity(n, n);
  if (n == 0) return m;

  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Matrix a = m / std::ldexp(1.0, squarings);

  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix inner_u = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
  const Matrix u = a * (inner_u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Matrix inner_v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2);
  const Matrix v = inner_v + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

DenseOperator expm_general(const DenseOperator& m) { return {expm(m.matrix()), m.site_dims()}; }

double trace_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double trace_norm(const DenseOperator& m) { return trace_norm(m.matrix()); }

Matrix polar_unitary_factor(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-12) {
    throw SingularMatrixError("polar_unitary_factor: matrix is rank deficient");
  }
  return svd.matrixU() * svd.matrixV().adjoint();
}

DenseOperator polar_unitary_factor(const DenseOperator& m) {
  return {polar_unitary_factor(m.matrix()), m.site_dims()};
}

}  // namespace hswitch
