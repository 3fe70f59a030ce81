#include "hswitch/errors.hpp"
#include "hswitch/model.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace hswitch;

namespace {

const cplx I(0.0, 1.0);

Matrix sx() { return (Matrix(2, 2) << 0, 1, 1, 0).finished(); }
Matrix sy() { return (Matrix(2, 2) << 0, -I, I, 0).finished(); }
Matrix sz() { return (Matrix(2, 2) << 1, 0, 0, -1).finished(); }
Matrix id2() { return Matrix::Identity(2, 2); }

Matrix chain(const std::vector<Matrix>& factors) {
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& f : factors) out = oracle::kron(out, f);
  return out;
}

}  // namespace

TEST(Pauli, SiteZeroIsMostSignificant) {
  const DenseOperator z0 = pauli_at(0, PauliAxis::z, 2);
  EXPECT_LT((z0.matrix() - chain({sz(), id2()})).norm(), 1e-15);
  const DenseOperator x1 = pauli_at(1, PauliAxis::x, 3);
  EXPECT_LT((x1.matrix() - chain({id2(), sx(), id2()})).norm(), 1e-15);
  EXPECT_THROW(pauli_at(3, PauliAxis::x, 3), DimensionError);
}

TEST(Pauli, LadderOperatorsLowerToGround) {
  const Matrix minus = pauli_at(0, PauliAxis::minus, 1).matrix();
  const Matrix plus = pauli_at(0, PauliAxis::plus, 1).matrix();
  EXPECT_EQ(minus(0, 1), cplx(1.0, 0.0));
  EXPECT_EQ(minus(1, 0), cplx(0.0, 0.0));
  EXPECT_LT((plus - minus.adjoint()).norm(), 1e-15);
  EXPECT_LT((minus + plus - sx()).norm(), 1e-15);
}

TEST(StaticHamiltonians, IsotropicMatchesExplicitKron) {
  SpinSystemSpec s;
  s.bath_counts = {2};
  s.couplings = {1.2, 1.7};
  s.frame = Frame::lab;
  s.bath_splittings = {0.9, 1.3};
  const auto h = build_static_hamiltonians(s);
  const Matrix hs = -0.5 * chain({sz(), id2(), id2()});
  const Matrix he = -0.45 * chain({id2(), sz(), id2()}) - 0.65 * chain({id2(), id2(), sz()});
  Matrix hi = Matrix::Zero(8, 8);
  for (const auto& p : {sx(), sy(), sz()}) {
    hi += 1.2 * chain({p, p, id2()}) + 1.7 * chain({p, id2(), p});
  }
  EXPECT_LT((h.system.matrix() - hs).norm(), 1e-14);
  EXPECT_LT((h.environment.matrix() - he).norm(), 1e-14);
  EXPECT_LT((h.interaction.matrix() - hi).norm(), 1e-14);
}

TEST(StaticHamiltonians, DipoleIsFlipFlop) {
  SpinSystemSpec s;
  s.bath_counts = {1};
  s.coupling_kind = CouplingKind::dipole;
  s.couplings = {0.004};
  const auto h = build_static_hamiltonians(s);
  const Matrix ref = 0.001 * (chain({sx(), sx()}) + chain({sy(), sy()}));
  EXPECT_LT((h.interaction.matrix() - ref).norm(), 1e-16);
  // XX + YY = 2 (s+ s- + s- s+): only |01> <-> |10> couples.
  EXPECT_EQ(h.interaction.matrix()(0, 0), cplx(0.0, 0.0));
  EXPECT_NEAR(h.interaction.matrix()(1, 2).real(), 0.002, 1e-16);
}

TEST(StaticHamiltonians, TwoQubitCouplingAndBathOwners) {
  SpinSystemSpec s = standard_parameter_presets("dipole_2qubit", {{1, 1}, 3});
  EXPECT_EQ(s.bath_owner(0), 0);
  EXPECT_EQ(s.bath_owner(1), 1);
  const auto h = build_static_hamiltonians(s);
  const Matrix zz = chain({sz(), sz(), id2(), id2()});
  const Matrix expect = -0.5 * chain({sz(), id2(), id2(), id2()}) - 0.525 * chain({id2(), sz(), id2(), id2()}) +
                        0.025 * zz;
  EXPECT_LT((h.system.matrix() - expect).norm(), 1e-14);
  // Bath spin 1 talks to qubit 1 only.
  const double a1 = s.couplings[1];
  const Matrix flip = a1 / 4.0 * (chain({id2(), sx(), id2(), sx()}) + chain({id2(), sy(), id2(), sy()}));
  const double a0 = s.couplings[0];
  const Matrix flip0 = a0 / 4.0 * (chain({sx(), id2(), sx(), id2()}) + chain({sy(), id2(), sy(), id2()}));
  EXPECT_LT((h.interaction.matrix() - flip - flip0).norm(), 1e-15);
}

TEST(StaticHamiltonians, RejectsIsotropicTwoQubit) {
  SpinSystemSpec s;
  s.n_qubits = 2;
  s.bath_counts = {0, 0};
  s.qubit_splittings = {1.0, 1.05};
  EXPECT_THROW(build_static_hamiltonians(s), InvalidArgument);
}

TEST(Spec, ValidationErrors) {
  SpinSystemSpec s;
  s.bath_counts = {2};
  s.couplings = {1.0};
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.couplings = {1.0, 1.0};
  s.bath_splittings = {1.0, 1.1};
  EXPECT_THROW(s.validate(), InvalidArgument);  // rotating frame with splittings
  s.frame = Frame::lab;
  EXPECT_NO_THROW(s.validate());
  s.t1_system = 0.0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.t1_system.reset();
  s.bath_counts = {8};
  s.couplings.assign(8, 1.0);
  s.bath_splittings.assign(8, 1.0);
  EXPECT_THROW(s.validate(), DimensionError);
}

TEST(Ansatz, TwoHamiltonianDifferenceIsDrive) {
  const SpinSystemSpec s = standard_parameter_presets("iso_variable", {{2}, 5});
  const SwitchingAnsatz a = build_switching_ansatz(s, AnsatzVariant::two_ham_x);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_LT(a.reconstruction_error(), 1e-15);
  const Matrix diff = a.hamiltonians[0].matrix() - a.hamiltonians[1].matrix();
  EXPECT_LT((diff - 4.0 * chain({sx(), id2(), id2()})).norm(), 1e-14);
  for (const auto& h : a.hamiltonians) EXPECT_TRUE(h.is_hermitian(1e-14));
  EXPECT_TRUE(a.universal);
}

TEST(Ansatz, VariantsShapes) {
  const SpinSystemSpec s = standard_parameter_presets("iso_equal", {{1}, 0});
  const auto z = build_switching_ansatz(s, AnsatzVariant::two_ham_z_nonuniversal);
  EXPECT_FALSE(z.universal);
  EXPECT_LT((z.controls[0].matrix() - 2.0 * chain({sz(), id2()})).norm(), 1e-15);
  const auto four = build_switching_ansatz(s, AnsatzVariant::four_ham_xy);
  ASSERT_EQ(four.size(), 4u);
  EXPECT_LT(four.reconstruction_error(), 1e-15);
  const Matrix d = four.hamiltonians[0].matrix() - four.hamiltonians[1].matrix();
  EXPECT_LT((d - 3.0 * chain({sy(), id2()})).norm(), 1e-14);
  EXPECT_THROW(build_switching_ansatz(s, AnsatzVariant::two_qubit), InvalidArgument);
}

TEST(Ansatz, TwoQubitDrivesBothQubits) {
  const SpinSystemSpec s = standard_parameter_presets("dipole_2qubit", {{0, 0}, 0});
  const auto a = build_switching_ansatz(s, AnsatzVariant::two_qubit);
  const Matrix expect = chain({sx(), id2()}) + chain({id2(), sx()});
  EXPECT_LT((a.controls[0].matrix() - expect).norm(), 1e-15);
  EXPECT_EQ(a.n_system_sites, 2);
}

TEST(Presets, DipoleDeviceParameters) {
  const SpinSystemSpec a = standard_parameter_presets("dipole_device", {{3}, 42});
  const SpinSystemSpec b = standard_parameter_presets("dipole_device", {{3}, 42});
  EXPECT_EQ(a.couplings, b.couplings);
  ASSERT_EQ(a.bath_splittings.size(), 3u);
  EXPECT_DOUBLE_EQ(a.bath_splittings[0], 1.1);
  EXPECT_DOUBLE_EQ(a.bath_splittings[2], 1.3);
  for (double c : a.couplings) {
    EXPECT_GE(c, 5e-4);
    EXPECT_LE(c, 5e-3);
  }
  EXPECT_EQ(a.frame, Frame::lab);
  const SpinSystemSpec c = standard_parameter_presets("dipole_device", {{3}, 43});
  EXPECT_NE(a.couplings, c.couplings);
  EXPECT_THROW(standard_parameter_presets("nope"), InvalidArgument);
  EXPECT_THROW(standard_parameter_presets("dipole_device", {{1, 1}, 0}), InvalidArgument);
}

TEST(Presets, IsotropicCouplings) {
  const auto eq = standard_parameter_presets("iso_equal", {{4}, 0});
  EXPECT_EQ(eq.couplings, std::vector<double>(4, 1.0));
  const auto var = standard_parameter_presets("iso_variable", {{4}, 9});
  for (double c : var.couplings) {
    EXPECT_GE(c, 1.0);
    EXPECT_LE(c, 2.0);
  }
}

TEST(Lindblad, RatesAndSites) {
  SpinSystemSpec s;
  s.bath_counts = {2};
  s.couplings = {1.0, 1.0};
  EXPECT_TRUE(build_lindblad_operators(s).empty());
  s.t1_system = 4.0;
  s.t1_tls = 25.0;
  const auto ls = build_lindblad_operators(s);
  ASSERT_EQ(ls.size(), 3u);
  Matrix lower = Matrix::Zero(2, 2);
  lower(0, 1) = 1.0;
  EXPECT_LT((ls[0].matrix() - 0.5 * chain({lower, id2(), id2()})).norm(), 1e-15);
  EXPECT_LT((ls[2].matrix() - 0.2 * chain({id2(), id2(), lower})).norm(), 1e-15);
}

TEST(Targets, StandardGates) {
  for (auto g : {GateName::Z, GateName::Hadamard, GateName::T}) {
    const TargetGate t = build_target(g, 1);
    EXPECT_TRUE(t.matrix.is_unitary(1e-14));
    EXPECT_EQ(t.n_qubits(), 1);
  }
  const TargetGate cnot = build_target(GateName::CNOT, 2);
  Matrix ref = Matrix::Identity(4, 4);
  ref.block(2, 2, 2, 2) = sx();
  EXPECT_LT((cnot.matrix.matrix() - ref).norm(), 1e-15);
  const TargetGate t = build_target(GateName::T, 1);
  EXPECT_NEAR(std::arg(t.matrix(1, 1)), M_PI / 4.0, 1e-15);
  EXPECT_THROW(build_target(GateName::CNOT, 1), InvalidArgument);
  Matrix bad = Matrix::Ones(2, 2);
  EXPECT_THROW(custom_target(bad), InvalidArgument);
}

TEST(Names, RoundTrip) {
  for (auto v : {AnsatzVariant::two_ham_x, AnsatzVariant::two_ham_z_nonuniversal, AnsatzVariant::four_ham_xy,
                 AnsatzVariant::two_qubit}) {
    EXPECT_EQ(parse_ansatz_variant(to_string(v)), v);
  }
  for (auto g : {GateName::Z, GateName::Hadamard, GateName::T, GateName::CNOT}) {
    EXPECT_EQ(parse_gate_name(to_string(g)), g);
  }
  EXPECT_EQ(parse_frame(to_string(Frame::lab)), Frame::lab);
  EXPECT_EQ(parse_coupling_kind(to_string(CouplingKind::dipole)), CouplingKind::dipole);
  EXPECT_THROW(parse_gate_name("SWAP"), InvalidArgument);
}

TEST(Units, NanosecondConversion) {
  EXPECT_NEAR(ns_to_units(1.0), 16.0 * M_PI, 1e-12);
  EXPECT_NEAR(units_to_ns(ns_to_units(0.37)), 0.37, 1e-15);
}
