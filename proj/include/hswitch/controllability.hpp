#pragma once

// Dynamical Lie algebra closure, subsystem controllability and the
// coefficient-matrix recursions for two bath spins.

#include "hswitch/model.hpp"
#include "hswitch/operator.hpp"

#include <span>
#include <string>
#include <vector>

namespace hswitch {

inline constexpr double kLieRankTolerance = 1e-8;
inline constexpr double kSpanResidualTolerance = 1e-7;

struct LieAlgebraBasis {
  std::vector<DenseOperator> generators;
  // Skew-Hermitian, Hilbert-Schmidt orthonormal.
  std::vector<DenseOperator> orthonormal_basis;
  bool closed = false;

  int dimension() const { return static_cast<int>(orthonormal_basis.size()); }
  // Norm of the component of `op` orthogonal to the span, relative to |op|.
  double span_residual(const DenseOperator& op) const;
  bool contains(const DenseOperator& op, double tol = kSpanResidualTolerance) const;
};

// i * h for each Hermitian h.
std::vector<DenseOperator> skew_generators(const std::vector<DenseOperator>& hermitian);

// Commutator closure with Gram-Schmidt against the current span. Throws
// InvalidArgument for non-skew-Hermitian input and Error when the span grows
// beyond max_dim without closing.
LieAlgebraBasis lie_closure(const std::vector<DenseOperator>& generators, int max_dim = 4096);

// True iff i sx, i sy, i sz on `site` all lie in the algebra.
bool subsystem_controllable(const LieAlgebraBasis& basis, int site);

enum class RecursionScheme { iso_lab, dipole_rotating, dipole_lab };

struct RecursionTable {
  RecursionScheme scheme = RecursionScheme::dipole_rotating;
  double g = 1.0;
  double h = 1.0;
  // Ratio of the two bath splittings (the first is normalized to 1).
  double eps = 1.0;
  // rows[s - 1] is the coefficient vector of order s.
  std::vector<std::vector<double>> rows;

  int width() const { return scheme == RecursionScheme::iso_lab ? 6 : 4; }
};

// Rows 1..s_max: the scheme's seed row followed by its linear recursion.
RecursionTable build_recursion_table(RecursionScheme scheme, double g, double h, double eps, int s_max);

// One step of the scheme's recursion.
std::vector<double> recursion_step(RecursionScheme scheme, double g, double h, double eps,
                                   std::span<const double> row);

inline constexpr double kDeterminantZeroThreshold = 1e-10;

// Determinant of the stacked, l2-normalized rows for the given orders (1-based).
double recursion_determinant(const RecursionTable& table, std::span<const int> s_indices);
double recursion_determinant(RecursionScheme scheme, double g, double h, double eps, std::span<const int> s_indices);

// Operator basis of the recursion coefficients, as Pauli strings over the
// sites (qubit, bath 1, bath 2), e.g. "IYI".
std::vector<std::string> recursion_operator_labels(RecursionScheme scheme);

struct ControllabilityRow {
  CouplingKind coupling = CouplingKind::isotropic;
  Frame frame = Frame::rotating;
  bool equal_couplings = true;
  int algebra_dimension = 0;
  bool qubit_controllable = false;
  bool bath_controllable = false;
};

// Closure of the two_ham_x ansatz for each single-qubit spec.
std::vector<ControllabilityRow> controllability_table(const std::vector<SpinSystemSpec>& specs);

// The eight coupling x frame x (equal | variable) systems with two bath
// spins: E = 1, lab-frame splittings (1.0, 1.1), equal couplings (1, 1),
// variable couplings (1.3, 1.7).
std::vector<SpinSystemSpec> standard_table_specs();

std::string to_string(RecursionScheme scheme);
RecursionScheme parse_recursion_scheme(std::string_view s);

}  // namespace hswitch
