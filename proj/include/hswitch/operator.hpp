#pragma once

// Dense complex operators on tensor-product Hilbert spaces and the handful of
// matrix functions the rest of the library is built on.

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

namespace hswitch {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Largest dimension accepted on either axis of any operator (superoperators
// on four qubits). Anything bigger is almost certainly an accidental blowup.
inline constexpr int kMaxDim = 256;

// A square complex matrix together with the ordered per-site dimensions of
// the space it acts on. product(site_dims) == dim always holds.
class DenseOperator {
 public:
  DenseOperator() = default;
  DenseOperator(Matrix entries, std::vector<int> site_dims);
  // Single-site-free operator: site_dims = {dim}.
  explicit DenseOperator(Matrix entries);

  static DenseOperator identity(std::vector<int> site_dims);
  static DenseOperator zero(std::vector<int> site_dims);
  // n_sites qubits.
  static DenseOperator qubits_identity(int n_sites);

  int dim() const { return static_cast<int>(entries_.rows()); }
  int num_sites() const { return static_cast<int>(site_dims_.size()); }
  const std::vector<int>& site_dims() const { return site_dims_; }
  const Matrix& matrix() const { return entries_; }

  cplx operator()(int i, int j) const { return entries_(i, j); }
  cplx trace() const { return entries_.trace(); }
  DenseOperator adjoint() const;

  bool is_hermitian(double tol = 1e-9) const;
  bool is_unitary(double tol = 1e-10) const;

  DenseOperator& operator+=(const DenseOperator& other);
  DenseOperator& operator-=(const DenseOperator& other);
  DenseOperator& operator*=(cplx scale);

  friend DenseOperator operator+(DenseOperator a, const DenseOperator& b) { return a += b; }
  friend DenseOperator operator-(DenseOperator a, const DenseOperator& b) { return a -= b; }
  friend DenseOperator operator*(DenseOperator a, cplx s) { return a *= s; }
  friend DenseOperator operator*(cplx s, DenseOperator a) { return a *= s; }
  friend DenseOperator operator*(double s, DenseOperator a) { return a *= cplx(s, 0.0); }
  // Operator product; both factors must share site structure.
  friend DenseOperator operator*(const DenseOperator& a, const DenseOperator& b);

 private:
  Matrix entries_;
  std::vector<int> site_dims_;
};

// Density matrix wrapper; construction checks trace, hermiticity and
// positivity to the given tolerance.
class DensityMatrix {
 public:
  explicit DensityMatrix(DenseOperator rho, double tol = 1e-9);

  // |psi><psi| for a normalized state on the given sites.
  static DensityMatrix pure(const Vector& psi, std::vector<int> site_dims);

  const DenseOperator& op() const { return rho_; }
  int dim() const { return rho_.dim(); }

 private:
  DenseOperator rho_;
};

// Frobenius norm of a - b.
double distance(const DenseOperator& a, const DenseOperator& b);

DenseOperator kron(const DenseOperator& a, const DenseOperator& b);

// Trace over every site not listed in `keep`. The result's sites keep their
// original relative order.
DenseOperator partial_trace(const DenseOperator& op, std::span<const int> keep);
DenseOperator partial_trace(const DenseOperator& op, std::initializer_list<int> keep);

// exp(-i h t) for Hermitian h, via eigendecomposition.
DenseOperator expm_hermitian_propagator(const DenseOperator& h, double t);

// exp(m) for an arbitrary square matrix (scaling and squaring with the
// degree-13 Pade approximant).
Matrix expm(const Matrix& m);
DenseOperator expm_general(const DenseOperator& m);

// Sum of singular values.
double trace_norm(const DenseOperator& m);
double trace_norm(const Matrix& m);

// Unitary factor P = U V^dagger of m = U S V^dagger. Throws
// SingularMatrixError when the smallest singular value is <= 1e-12.
DenseOperator polar_unitary_factor(const DenseOperator& m);
Matrix polar_unitary_factor(const Matrix& m);

// Throws DimensionError when dim exceeds kMaxDim.
void check_dim_cap(int dim);

}  // namespace hswitch
