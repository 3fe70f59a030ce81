#include "hswitch/errors.hpp"
#include "hswitch/operator.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace hswitch;

namespace {

std::mt19937_64 rng_for(int seed) { return std::mt19937_64(static_cast<std::uint64_t>(seed)); }

}  // namespace

TEST(DenseOperator, RejectsMismatchedSiteDims) {
  EXPECT_THROW(DenseOperator(Matrix::Identity(4, 4), {2, 3}), DimensionError);
  EXPECT_THROW(DenseOperator(Matrix::Identity(4, 2), {4}), DimensionError);
}

TEST(DenseOperator, ProductRequiresSameDimension) {
  const DenseOperator a = DenseOperator::identity({2, 2});
  const DenseOperator b = DenseOperator::identity({2});
  EXPECT_THROW(a * b, DimensionError);
}

TEST(DenseOperator, DimensionCap) {
  EXPECT_NO_THROW(check_dim_cap(kMaxDim));
  EXPECT_THROW(check_dim_cap(kMaxDim + 1), DimensionError);
}

TEST(Kron, MatchesBlockFormula) {
  auto rng = rng_for(1);
  const Matrix a = oracle::random_matrix(2, rng);
  const Matrix b = oracle::random_matrix(3, rng);
  const DenseOperator k = kron(DenseOperator(a, {2}), DenseOperator(b, {3}));
  EXPECT_EQ(k.site_dims(), (std::vector<int>{2, 3}));
  EXPECT_LT((k.matrix() - oracle::kron(a, b)).norm(), 1e-14);
}

TEST(PartialTrace, MatchesIndexLoops) {
  auto rng = rng_for(2);
  const std::vector<int> dims{2, 3, 2};
  const Matrix m = oracle::random_matrix(12, rng);
  const DenseOperator op(m, dims);
  for (const std::vector<int>& keep : {std::vector<int>{0}, {1}, {2}, {0, 2}, {0, 1}, {1, 2}, {0, 1, 2}, {}}) {
    const DenseOperator pt = partial_trace(op, keep);
    const Matrix ref = oracle::partial_trace(m, dims, keep);
    ASSERT_EQ(pt.dim(), ref.rows());
    EXPECT_LT((pt.matrix() - ref).norm(), 1e-12) << "keep size " << keep.size();
  }
}

TEST(PartialTrace, ProductStateFactorizes) {
  auto rng = rng_for(3);
  const Matrix a = oracle::random_matrix(2, rng);
  const Matrix b = oracle::random_matrix(4, rng);
  const DenseOperator ab(oracle::kron(a, b), {2, 4});
  EXPECT_LT((partial_trace(ab, {0}).matrix() - b.trace() * a).norm(), 1e-12);
  EXPECT_LT((partial_trace(ab, {1}).matrix() - a.trace() * b).norm(), 1e-12);
}

TEST(PartialTrace, RejectsBadSites) {
  const DenseOperator op = DenseOperator::identity({2, 2});
  EXPECT_THROW(partial_trace(op, {2}), DimensionError);
  EXPECT_THROW(partial_trace(op, {0, 0}), InvalidArgument);
}

TEST(Expm, MatchesTaylorOracle) {
  auto rng = rng_for(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = oracle::random_matrix(6, rng, 0.2 + trial);
    const Matrix ref = oracle::taylor_expm(m);
    EXPECT_LT((expm(m) - ref).norm() / ref.norm(), 1e-11) << "trial " << trial;
  }
}

TEST(Expm, HermitianPropagatorMatchesTaylor) {
  auto rng = rng_for(5);
  for (double t : {0.0, 0.3, 2.0, 17.0}) {
    const Matrix h = oracle::random_hermitian(8, rng);
    const DenseOperator u = expm_hermitian_propagator(DenseOperator(h, {2, 2, 2}), t);
    EXPECT_TRUE(u.is_unitary(1e-12));
    EXPECT_LT((u.matrix() - oracle::taylor_expm(cplx(0.0, -t) * h)).norm(), 1e-10) << "t=" << t;
  }
}

TEST(Expm, HermitianPropagatorRejectsNonHermitian) {
  auto rng = rng_for(6);
  EXPECT_THROW(expm_hermitian_propagator(DenseOperator(oracle::random_matrix(2, rng)), 1.0), NotHermitianError);
}

TEST(TraceNorm, MatchesEigenvaluesOfGram) {
  auto rng = rng_for(7);
  const Matrix m = oracle::random_matrix(5, rng);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.adjoint() * m);
  double ref = 0.0;
  for (int i = 0; i < 5; ++i) ref += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  EXPECT_NEAR(trace_norm(m), ref, 1e-11);
  EXPECT_NEAR(trace_norm(Matrix::Identity(3, 3)), 3.0, 1e-14);
}

TEST(PolarFactor, UnitaryAndMaximizesOverlap) {
  auto rng = rng_for(8);
  const Matrix m = oracle::random_matrix(4, rng);
  const Matrix p = polar_unitary_factor(m);
  EXPECT_LT((p.adjoint() * p - Matrix::Identity(4, 4)).norm(), 1e-12);
  // P^dagger M is the positive factor, and Re tr(P^dagger M) = |M|_tr.
  const Matrix pos = p.adjoint() * m;
  EXPECT_LT((pos - pos.adjoint()).norm(), 1e-11);
  EXPECT_NEAR(pos.trace().real(), trace_norm(m), 1e-11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix v = oracle::random_unitary(4, rng);
    EXPECT_LE((v.adjoint() * m).trace().real(), trace_norm(m) + 1e-12);
  }
}

TEST(PolarFactor, SingularThrows) {
  Matrix m = Matrix::Identity(3, 3);
  m(2, 2) = 0.0;
  EXPECT_THROW(polar_unitary_factor(m), SingularMatrixError);
}

TEST(DensityMatrix, ValidatesTraceAndPositivity) {
  Matrix rho = Matrix::Zero(2, 2);
  rho(0, 0) = 1.0;
  EXPECT_NO_THROW(DensityMatrix(DenseOperator(rho, {2})));
  rho(1, 1) = 0.5;
  EXPECT_THROW(DensityMatrix(DenseOperator(rho, {2})), InvalidArgument);
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_THROW(DensityMatrix(DenseOperator(neg, {2})), InvalidArgument);
}

TEST(DensityMatrix, PureState) {
  Vector psi(2);
  psi << cplx(1.0, 0.0), cplx(0.0, 1.0);
  psi /= std::sqrt(2.0);
  const DensityMatrix rho = DensityMatrix::pure(psi, {2});
  EXPECT_NEAR(rho.op().trace().real(), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(rho.op()(0, 1) - cplx(0.0, -0.5)), 0.0, 1e-15);
}
