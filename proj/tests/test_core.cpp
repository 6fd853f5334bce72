// RNG, random matrices, statistics and the many-body engines.
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "purify/manybody.hpp"
#include "purify/randmat.hpp"
#include "purify/rng.hpp"
#include "purify/stats.hpp"

using namespace purify;

namespace {

McEstimate estimate_of(const std::vector<double>& v) { return stats::estimate(v); }

}  // namespace

TEST(Rng, SameSeedAndStreamReplays) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, StreamsDiffer) {
  RngStream a(42, 0), b(42, 1);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a() == b();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, SplitIsPureFunctionOfParentState) {
  const RngStream parent(9, 3);
  RngStream x = parent.split(5), y = parent.split(5), z = parent.split(6);
  EXPECT_EQ(x(), y());
  EXPECT_NE(x(), z());
}

TEST(Rng, UniformAndNormalMoments) {
  RngStream r(1);
  std::vector<double> u(200000), g(200000);
  for (auto& v : u) v = r.uniform();
  for (auto& v : g) v = r.normal();
  EXPECT_TRUE(estimate_of(u).agrees_with(0.5, 4.0, 0.0));
  EXPECT_TRUE(estimate_of(g).agrees_with(0.0, 4.0, 0.0));
  for (auto& v : g) v = v * v;
  EXPECT_TRUE(estimate_of(g).agrees_with(1.0, 4.0, 0.0));
}

TEST(Rng, GammaMean) {
  RngStream r(2);
  for (double shape : {0.5, 1.0, 7.5}) {
    std::vector<double> x(100000);
    for (auto& v : x) v = r.gamma(shape);
    EXPECT_TRUE(estimate_of(x).agrees_with(shape, 4.0, 0.0)) << shape;
  }
}

TEST(Rng, BelowStaysInRange) {
  RngStream r(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) ++hits[r.below(7)];
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(Randmat, HaarUnitaryRejectsZeroDimension) {
  RngStream r(1);
  EXPECT_THROW(sample_haar_unitary(0, r), InvalidDimension);
}

TEST(Randmat, HaarUnitaryOneByOneHasUnitModulus) {
  RngStream r(1);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(std::abs(sample_haar_unitary(1, r).entries(0, 0)), 1.0, 1e-14);
}

TEST(Randmat, HaarUnitaryIsUnitary) {
  RngStream r(4);
  for (Eigen::Index n : {2, 5, 16, 64}) EXPECT_LT(linalg::unitarity_defect(sample_haar_unitary(n, r).entries), 1e-12);
}

TEST(Randmat, HaarUnitaryEntryVariance) {
  RngStream r(5);
  std::vector<double> x(100000);
  for (auto& v : x) v = std::norm(sample_haar_unitary(8, r).entries(0, 0));
  EXPECT_TRUE(estimate_of(x).agrees_with(1.0 / 8.0, 3.0, 0.0));
}

TEST(Randmat, SpecialOrthogonalRejectsOddOrTiny) {
  RngStream r(1);
  EXPECT_THROW(sample_haar_special_orthogonal(3, r), InvalidDimension);
  EXPECT_THROW(sample_haar_special_orthogonal(0, r), InvalidDimension);
}

TEST(Randmat, SpecialOrthogonalTwoIsRotation) {
  RngStream r(6);
  const RMatrix o = sample_haar_special_orthogonal(2, r).entries;
  EXPECT_NEAR(o(0, 0), o(1, 1), 1e-14);
  EXPECT_NEAR(o(0, 1), -o(1, 0), 1e-14);
  EXPECT_NEAR(o.determinant(), 1.0, 1e-14);
}

TEST(Randmat, SpecialOrthogonalProperties) {
  RngStream r(7);
  std::vector<double> x(100000);
  for (auto& v : x) {
    const RMatrix o = sample_haar_special_orthogonal(8, r).entries;
    v = o(0, 0) * o(0, 0);
  }
  EXPECT_TRUE(estimate_of(x).agrees_with(1.0 / 8.0, 3.0, 0.0));
  const RMatrix o = sample_haar_special_orthogonal(32, r).entries;
  EXPECT_LT(linalg::orthogonality_defect(o), 1e-12);
  EXPECT_NEAR(o.determinant(), 1.0, 1e-10);
}

TEST(Randmat, ProjectorRankChecks) {
  RngStream r(1);
  EXPECT_THROW(sample_random_projector(8, 0, r), InvalidRank);
  EXPECT_THROW(sample_random_projector(8, 8, r), InvalidRank);
  const Projector p = sample_random_projector(2, 1, r);
  EXPECT_NEAR(p.entries.trace().real(), 1.0, 1e-12);
  EXPECT_LT(linalg::max_abs(CMatrix(p.entries * p.entries - p.entries)), 1e-12);
}

TEST(Randmat, ProjectorTraceAgainstMixedState) {
  RngStream r(8);
  const CMatrix rho = CMatrix::Identity(16, 16) / 16.0;
  for (int i = 0; i < 50; ++i)
    EXPECT_NEAR(linalg::trace_product_hermitian(sample_random_projector(16, 8, r).entries, rho), 0.5, 1e-12);
}

// The compression sampler must reproduce the law of the top-left block of a
// full Haar projector: E B_11 = r/N and E |B_12|^2 = r(N-r)/(N(N^2-1)).
TEST(Randmat, CompressionMatchesFullProjectorLaw) {
  const Eigen::Index n = 12, rank = 5, d = 3;
  const double m11 = double(rank) / n, m12 = double(rank * (n - rank)) / (n * (n * n - 1.0));
  RngStream r1(10), r2(11);
  std::vector<double> a11(40000), a12(40000), b11(40000), b12(40000);
  for (std::size_t i = 0; i < a11.size(); ++i) {
    const CMatrix full = sample_random_projector(n, rank, r1).entries;
    a11[i] = full(0, 0).real();
    a12[i] = std::norm(full(0, 1));
    const CompressedProjector c = sample_projector_compression(d, n, rank, r2);
    const CMatrix b = c.compression();
    b11[i] = b(0, 0).real();
    b12[i] = std::norm(b(0, 1));
    const CMatrix sum = b + c.minus * c.minus.adjoint();
    ASSERT_LT(linalg::max_abs(CMatrix(sum - CMatrix::Identity(d, d))), 1e-10);
  }
  EXPECT_TRUE(estimate_of(a11).agrees_with(m11, 3.0, 0.0));
  EXPECT_TRUE(estimate_of(b11).agrees_with(m11, 3.0, 0.0));
  EXPECT_TRUE(estimate_of(a12).agrees_with(m12, 3.0, 0.0));
  EXPECT_TRUE(estimate_of(b12).agrees_with(m12, 3.0, 0.0));
}

TEST(Stats, LeastSquaresExactLine) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto f = stats::least_squares(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-15);
  EXPECT_NEAR(f.intercept, 1.0, 1e-15);
  EXPECT_THROW(stats::least_squares(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

TEST(Stats, EstimateStandardError) {
  const std::vector<double> v{1, 2, 3, 4};
  const McEstimate e = stats::estimate(v);
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_NEAR(e.standard_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(Manybody, StatesAndValidation) {
  EXPECT_THROW(maximally_mixed(1), InvalidDimension);
  EXPECT_NEAR(purity(maximally_mixed(8)), 1.0 / 8.0, 1e-15);
  EXPECT_NEAR(vn_entropy(maximally_mixed(8)), std::log(8.0), 1e-12);
  RVector p(2);
  p << 0.7, 0.3;
  EXPECT_NEAR(purity(diagonal_state(p)), 0.58, 1e-15);
  p << 0.7, 0.4;
  EXPECT_THROW(diagonal_state(p), InvalidState);
  EXPECT_THROW(mixed_on_support(4, 5), InvalidRank);
  RngStream r(1);
  EXPECT_NO_THROW(validate(random_density_matrix(6, 3, r)));
}

TEST(Manybody, PostselectOnPureStateKeepsPurity) {
  RngStream r(2);
  CMatrix psi = CMatrix::Zero(4, 4);
  psi(0, 0) = 1.0;
  const Projector p = sample_random_projector(4, 2, r);
  EXPECT_NEAR(purity(postselect_step({psi}, p)), 1.0, 1e-12);
}

TEST(Manybody, PostselectOrthogonalBranchThrows) {
  CMatrix psi = CMatrix::Zero(2, 2);
  psi(0, 0) = 1.0;
  CMatrix proj = CMatrix::Zero(2, 2);
  proj(1, 1) = 1.0;
  EXPECT_THROW(postselect_step({psi}, {proj, 1}), ZeroProbabilityBranch);
}

TEST(Manybody, MeasureStepForcedBranchAndDimensionCheck) {
  RngStream r(3);
  CMatrix psi = CMatrix::Zero(2, 2);
  psi(0, 0) = 1.0;
  CMatrix proj = CMatrix::Zero(2, 2);
  proj(1, 1) = 1.0;
  const auto [next, out] = measure_step({psi}, {proj, 1}, r);
  EXPECT_EQ(out.branch, Branch::minus);
  EXPECT_NEAR(out.probability, 1.0, 1e-15);
  EXPECT_NEAR(purity(next), 1.0, 1e-15);
  EXPECT_THROW(measure_step(maximally_mixed(4), {proj, 1}, r), InvalidDimension);
}

TEST(Manybody, Rank2TheoryValues) {
  EXPECT_NEAR(rank2_theory_purity(0.0, 500, Mode::measurement), 0.5, 1e-15);
  EXPECT_NEAR(rank2_theory_purity(0.0, 500, Mode::postselection), 0.5, 1e-15);
  EXPECT_NEAR(rank2_theory_purity(500, 500, Mode::measurement), 0.86023457780552064, 1e-14);
  EXPECT_NEAR(rank2_theory_purity(500, 500, Mode::postselection), 0.8, 1e-14);
}

TEST(Manybody, AverageEntropyValidatesMeasurement) {
  const DensityMatrix rho = maximally_mixed(4);
  CMatrix p0 = CMatrix::Zero(4, 4);
  p0(0, 0) = p0(1, 1) = 1.0;
  EXPECT_THROW(avg_entropy_after_measurement(rho, {p0}), InvalidMeasurement);
  const CMatrix p1 = CMatrix::Identity(4, 4) - p0;
  const BranchAverages avg = avg_entropy_after_measurement(rho, {p0, p1});
  EXPECT_NEAR(avg.entropy, std::log(2.0), 1e-12);
  EXPECT_NEAR(avg.sqrt_purity, std::sqrt(0.5), 1e-12);
}

TEST(Manybody, SpectralStepInvariants) {
  RngStream r(4);
  for (Mode mode : {Mode::measurement, Mode::postselection}) {
    SpectralState s = spectral_mixed_on_support(40, 40);
    for (int t = 0; t < 60; ++t) {
      const double before = s.purity();
      const MeasurementOutcome o = spectral_step(s, 20, mode, r);
      ASSERT_NEAR(s.lambda.sum(), 1.0, 1e-12);
      ASSERT_GE(s.lambda.minCoeff(), 0.0);
      ASSERT_GT(o.probability, 0.0);
      if (mode == Mode::postselection) ASSERT_EQ(o.branch, Branch::plus);
      ASSERT_GE(s.purity(), 1.0 / 40.0 - 1e-12);
      (void)before;
    }
  }
  SpectralState s = spectral_mixed_on_support(8, 8);
  EXPECT_THROW(spectral_step(s, 8, Mode::measurement, r), InvalidRank);
}

TEST(Manybody, TrajectoriesReplayFromSeed) {
  for (Engine e : {Engine::spectral, Engine::dense}) {
    TrajectoryOptions opt;
    opt.engine = e;
    const auto a = run_trajectory(16, 40, Mode::measurement, RngStream(5, 2), opt);
    const auto b = run_trajectory(16, 40, Mode::measurement, RngStream(5, 2), opt);
    ASSERT_EQ(a.rows.size(), 41u);
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].purity, b.rows[i].purity);
    EXPECT_NEAR(a.rows[0].purity, 1.0 / 16.0, 1e-15);
  }
  EXPECT_THROW(run_trajectory(7, 10, Mode::measurement, 1), InvalidDimension);
}

// Both engines sample the same law; compare ensemble means at a few times.
TEST(Manybody, SpectralAndDenseEnginesAgreeStatistically) {
  const Eigen::Index n = 16;
  const int walkers = 400, steps = 24;
  for (Mode mode : {Mode::measurement, Mode::postselection}) {
    std::vector<std::vector<double>> sp(steps + 1, std::vector<double>(walkers)), de = sp;
    for (int w = 0; w < walkers; ++w) {
      TrajectoryOptions dense;
      dense.engine = Engine::dense;
      const auto a = run_trajectory(n, steps, mode, RngStream(100, w));
      const auto b = run_trajectory(n, steps, mode, RngStream(200, w), dense);
      for (int t = 0; t <= steps; ++t) {
        sp[t][w] = a.rows[t].purity;
        de[t][w] = b.rows[t].purity;
      }
    }
    for (int t : {4, 12, 24}) {
      const McEstimate x = stats::estimate(sp[t]), y = stats::estimate(de[t]);
      const double se = std::hypot(x.standard_error, y.standard_error);
      EXPECT_LT(std::abs(x.mean - y.mean), 4.0 * se) << to_string(mode) << " t=" << t;
    }
  }
}

TEST(Manybody, RankTwoSpectralStartMatchesSupport) {
  const auto rec = run_trajectory(64, 5, Mode::postselection, RngStream(1), {Engine::spectral, 2});
  EXPECT_NEAR(rec.rows[0].purity, 0.5, 1e-15);
  for (const auto& row : rec.rows) EXPECT_GE(row.purity, 0.5 - 1e-12);
}
