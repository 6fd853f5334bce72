// Gaussian fermion updates against the dense Fock oracle, and the stabilizer tableau.
#include <gtest/gtest.h>

#include <cmath>

#include "purify/fermion.hpp"
#include "purify/fock.hpp"
#include "purify/stabilizer.hpp"

using namespace purify;

namespace {

RVector vec(std::initializer_list<double> vals) {
  RVector v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

}  // namespace

TEST(Fermion, ProxyAndRenyiAtReferenceStates) {
  const auto mixed = canonical_majorana(RVector::Zero(4));
  EXPECT_NEAR(s_proxy(mixed), 4 * kLog2, 1e-14);
  EXPECT_NEAR(renyi2(mixed), 4 * kLog2, 1e-14);
  const auto pure = canonical_majorana(RVector::Ones(4));
  EXPECT_NEAR(s_proxy(pure), 0.0, 1e-14);
  EXPECT_NEAR(renyi2(pure), 0.0, 1e-14);
  EXPECT_NEAR(renyi2(canonical_majorana(vec({0.5}))), 0.47000362924573555, 1e-15);
}

TEST(Fermion, WilliamsonSortedAndRotationInvariant) {
  RngStream r(1);
  const RVector lam = vec({0.2, 0.9, 0.5});
  const RVector w = williamson(rotated_majorana(lam, r));
  EXPECT_NEAR(w(0), 0.9, 1e-12);
  EXPECT_NEAR(w(1), 0.5, 1e-12);
  EXPECT_NEAR(w(2), 0.2, 1e-12);
  RMatrix bad = RMatrix::Zero(3, 3);
  EXPECT_THROW(williamson({bad}), std::exception);
}

TEST(Fermion, MeasuringMixedModeGivesHalfAndPurifiesIt) {
  const ModeCorrelationMatrix m{CMatrix::Zero(3, 3)};
  const auto p = detail::outcome_probabilities(0.0);
  EXPECT_DOUBLE_EQ(p.p_plus, 0.5);
  const auto plus = conserving_branch(m, 1, Branch::plus);
  EXPECT_NEAR(plus.entries(1, 1).real(), 1.0, 1e-15);
  EXPECT_NEAR(s_proxy(plus), 2 * kLog2, 1e-14);
  const auto minus = general_branch(to_majorana(m), 1, Branch::minus);
  EXPECT_NEAR(minus.entries(2, 3), -1.0, 1e-15);
}

TEST(Fermion, ForbiddenBranchThrows) {
  ModeCorrelationMatrix m{CMatrix::Zero(2, 2)};
  m.entries(0, 0) = 1.0;
  EXPECT_THROW(conserving_branch(m, 0, Branch::minus), ZeroProbabilityBranch);
  EXPECT_THROW(conserving_branch(m, 2, Branch::plus), InvalidDimension);
}

TEST(Fermion, ConservingUpdateEmbedsIntoGeneralUpdate) {
  RngStream r(2);
  for (int i = 0; i < 20; ++i) {
    const auto m = random_mode_state(4, r);
    for (Branch b : {Branch::plus, Branch::minus}) {
      const auto lhs = to_majorana(conserving_branch(m, 2, b));
      const auto rhs = general_branch(to_majorana(m), 2, b);
      EXPECT_LT(linalg::max_abs(RMatrix(lhs.entries - rhs.entries)), 1e-12);
    }
  }
}

TEST(Fermion, DeltaProxyClosedFormMatchesBranches) {
  RngStream r(3);
  for (int i = 0; i < 20; ++i) {
    const auto c = random_mode_state(6, r);
    EXPECT_NEAR(delta_s_proxy_conserving(c, 3), delta_s_proxy_direct(c, 3), 1e-12);
    const auto g = random_majorana_state(6, r);
    EXPECT_NEAR(delta_s_proxy_general(g, 4), delta_s_proxy_direct(g, 4), 1e-12);
    EXPECT_LE(delta_s_proxy_general(g, 4), 1e-15);
  }
}

TEST(FockOracle, GeneralAndConservingUpdatesAgree) {
  RngStream r(4);
  for (int n = 2; n <= 4; ++n)
    for (int i = 0; i < 5; ++i) {
      const auto m = random_majorana_state(n, r);
      const FockReport rep = fock_oracle(m, 1, r);
      EXPECT_LT(linalg::max_abs(RMatrix(rep.majorana - m.entries)), 1e-10);
      EXPECT_NEAR(rep.plus.probability, detail::outcome_probabilities(m.entries(2, 3)).p_plus, 1e-10);
      EXPECT_LT(linalg::max_abs(RMatrix(general_branch(m, 1, Branch::plus).entries - rep.plus.majorana)), 1e-10);
      EXPECT_LT(linalg::max_abs(RMatrix(general_branch(m, 1, Branch::minus).entries - rep.minus.majorana)), 1e-10);

      const auto c = random_mode_state(n, r);
      const FockReport cr = fock_oracle(c, 0);
      EXPECT_LT(linalg::max_abs(CMatrix(cr.mode - c.entries)), 1e-10);
      EXPECT_LT(linalg::max_abs(CMatrix(conserving_branch(c, 0, Branch::minus).entries - cr.minus.mode)), 1e-10);
    }
  EXPECT_THROW(FockSpace(6), SizeError);
}

// One literal step (rotate, measure mode 1) equals one frame step measured
// along the first row(s) of the same rotation, up to that rotation.
TEST(FermionProtocol, FrameStepEqualsLiteralStepConserving) {
  RngStream r(5);
  for (int i = 0; i < 20; ++i) {
    const auto m = random_mode_state(6, r);
    const CMatrix u = sample_haar_unitary(6, r).entries;
    const std::uint64_t s = r();
    RngStream ra(s), rb(s);
    const auto lit = measure_mode_conserving(apply_mode_unitary(m, u), 0, ra);
    CMatrix frame = m.entries;
    const FermionOutcome fo = measure_direction_conserving(frame, u.row(0).adjoint(), rb);
    ASSERT_EQ(lit.second.branch, fo.branch);
    EXPECT_NEAR(lit.second.p_plus, fo.p_plus, 1e-12);
    EXPECT_LT(linalg::max_abs(CMatrix(u.adjoint() * lit.first.entries * u - frame)), 1e-11);
  }
}

TEST(FermionProtocol, FrameStepEqualsLiteralStepGeneral) {
  RngStream r(6);
  for (int i = 0; i < 20; ++i) {
    const auto m = random_majorana_state(5, r);
    const SpecialOrthogonal o = sample_haar_special_orthogonal(10, r);
    const std::uint64_t s = r();
    RngStream ra(s), rb(s);
    const auto lit = measure_mode_general(apply_rotation(m, o), 0, ra);
    RMatrix frame = m.entries;
    const FermionOutcome fo =
        measure_frame_general(frame, o.entries.row(0).transpose(), o.entries.row(1).transpose(), rb);
    ASSERT_EQ(lit.second.branch, fo.branch);
    EXPECT_LT(linalg::max_abs(RMatrix(o.entries.transpose() * lit.first.entries * o.entries - frame)), 1e-11);
  }
}

TEST(FermionProtocol, EnsemblesAgreeStatistically) {
  for (FermionVariant v : {FermionVariant::conserving, FermionVariant::general}) {
    FermionRunOptions frame, literal;
    frame.record_every = literal.record_every = 8;
    literal.protocol = FermionProtocol::literal;
    const auto a = run_purification(8, 64, v, 300, 7, frame);
    const auto b = run_purification(8, 64, v, 300, 8, literal);
    for (std::size_t i = 1; i < a.times.size(); ++i) {
      const double se = std::hypot(a.stderr_density[i], b.stderr_density[i]);
      EXPECT_LT(std::abs(a.mean_density[i] - b.mean_density[i]), 4.0 * se + 1e-12)
          << to_string(v) << " t=" << a.times[i];
    }
  }
}

TEST(FermionRun, StartsMixedAndReplaysAcrossWorkers) {
  FermionRunOptions one, three;
  three.workers = 3;
  const auto a = run_purification(6, 30, FermionVariant::general, 7, 9, one);
  const auto b = run_purification(6, 30, FermionVariant::general, 7, 9, three);
  EXPECT_NEAR(a.mean_density.front(), 1.0, 1e-15);
  for (std::size_t w = 0; w < 7; ++w) EXPECT_EQ(a.paths[w].s_proxy, b.paths[w].s_proxy);
  EXPECT_THROW(run_purification(1, 10, FermionVariant::general, 7, 9), InvalidDimension);
}

TEST(Pairing, LeadingOrderAtMixedState) {
  EXPECT_NEAR(pairing_leading_order(canonical_majorana(RVector::Zero(32))), 0.68231675586369616, 1e-14);
  EXPECT_NEAR(pairing_leading_order(canonical_majorana(RVector::Ones(8))), 0.0, 1e-15);
}

TEST(Stabilizer, PauliAlgebra) {
  const auto x = PauliString::parse("XI"), z = PauliString::parse("ZI"), y = PauliString::parse("YZ");
  EXPECT_EQ(symplectic_product(x, z), 1);
  EXPECT_EQ(symplectic_product(x, x), 0);
  EXPECT_EQ(y.str(), "YZ");
  EXPECT_THROW(PauliString::parse("XQ"), std::invalid_argument);
  EXPECT_THROW(symplectic_product(x, PauliString::parse("X")), SizeError);
}

TEST(Stabilizer, MeasurementCases) {
  StabilizerTableau t(2);
  EXPECT_EQ(entropy_bits(t), 2);
  EXPECT_EQ(measure_pauli(t, PauliString::parse("II")), MeasureCase::identity);
  EXPECT_EQ(measure_pauli(t, PauliString::parse("ZI")), MeasureCase::added);
  EXPECT_EQ(measure_pauli(t, PauliString::parse("IZ")), MeasureCase::added);
  EXPECT_EQ(measure_pauli(t, PauliString::parse("ZZ")), MeasureCase::redundant);
  EXPECT_EQ(measure_pauli(t, PauliString::parse("XX")), MeasureCase::replaced);
  EXPECT_EQ(entropy_bits(t), 0);
  EXPECT_TRUE(t.valid());
  EXPECT_EQ(measure_pauli(t, PauliString::parse("XI")), MeasureCase::replaced);
  EXPECT_TRUE(t.valid());
}

TEST(Stabilizer, AddedProbabilityAndExpectedSteps) {
  EXPECT_NEAR(added_probability(10, 0), 0.99999904632568359, 1e-16);
  EXPECT_NEAR(added_probability(10, 3), 0.12499237060546875, 1e-16);
  EXPECT_NEAR(expected_steps_to_pure(6), 74.878202969284563, 1e-11);
  EXPECT_NEAR(expected_steps_to_pure(10), 1213.0518054387936, 1e-9);
}

TEST(Stabilizer, RunStaysValidAndMonotone) {
  const auto rec = run_purification(8, 500, PauliSampling::uniform_nonidentity, 3);
  for (std::size_t i = 1; i < rec.rows.size(); ++i) {
    const int d = rec.rows[i].entropy_bits - rec.rows[i - 1].entropy_bits;
    ASSERT_TRUE(d == 0 || d == -1);
    ASSERT_NE(rec.rows[i].measure_case, MeasureCase::identity);
  }
  ASSERT_TRUE(rec.steps_to_pure.has_value());
  EXPECT_EQ(rec.rows[static_cast<std::size_t>(*rec.steps_to_pure)].entropy_bits, 0);
}

TEST(Stabilizer, EnsembleIndependentOfWorkers) {
  const auto a = run_stabilizer_ensemble(6, 50, 100000, PauliSampling::uniform_all_paulis, 4, 1);
  const auto b = run_stabilizer_ensemble(6, 50, 100000, PauliSampling::uniform_all_paulis, 4, 3);
  EXPECT_EQ(a.steps_to_pure, b.steps_to_pure);
  EXPECT_EQ(a.added_at_k, b.added_at_k);
  EXPECT_EQ(a.entropy_violations, 0);
}
