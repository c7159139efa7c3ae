#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "cvqkd/cvqkd.hpp"
#include "helpers.hpp"
#include "reference_values.hpp"

namespace cvqkd {
namespace {

using test::max_abs_diff;
using test::random_state;
using test::random_symplectic;

TEST(SymplecticForm, SingleModeDefinition) {
    Eigen::MatrixXd expected(2, 2);
    expected << 0, 1, -1, 0;
    EXPECT_EQ(symplectic_form(1), expected);
}

TEST(SymplecticForm, SquaresToMinusIdentityAndUnitDeterminant) {
    for (int n = 1; n <= 5; ++n) {
        const Eigen::MatrixXd omega = symplectic_form(n);
        EXPECT_NEAR(max_abs_diff(omega * omega,
                                 -Eigen::MatrixXd::Identity(2 * n, 2 * n)),
                    0.0, 1e-15);
        EXPECT_NEAR(max_abs_diff(omega.transpose(), -omega), 0.0, 1e-15);
        EXPECT_NEAR(omega.determinant(), 1.0, 1e-12);
    }
}

TEST(SymplecticForm, RejectsZeroModes) {
    EXPECT_THROW(symplectic_form(0), invalid_argument);
}

TEST(QuadratureCovarianceCtor, RejectsOddAndNonSquare) {
    EXPECT_THROW(QuadratureCovariance(Eigen::MatrixXd::Identity(3, 3)),
                 invalid_argument);
    EXPECT_THROW(QuadratureCovariance(Eigen::MatrixXd::Identity(1, 1)),
                 invalid_argument);
    EXPECT_THROW(QuadratureCovariance(Eigen::MatrixXd::Zero(2, 4)),
                 invalid_argument);
}

TEST(QuadratureCovarianceCtor, RejectsAsymmetryAboveTolerance) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(2, 2);
    g(0, 1) = 1e-8;
    EXPECT_THROW(QuadratureCovariance{g}, invalid_argument);
}

TEST(QuadratureCovarianceCtor, SymmetrizesTinyAsymmetry) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(2, 2);
    g(0, 1) = 4e-11;  // below the 1e-10 construction tolerance
    const QuadratureCovariance gamma(g);
    EXPECT_DOUBLE_EQ(gamma.matrix()(0, 1), gamma.matrix()(1, 0));
    EXPECT_NEAR(gamma.matrix()(0, 1), 2e-11, 1e-15);
}

TEST(QuadratureCovarianceCtor, DefaultAndExplicitLabels) {
    const QuadratureCovariance def(Eigen::MatrixXd::Identity(4, 4));
    EXPECT_EQ(def.labels(), (std::vector<std::string>{"M1", "M2"}));
    const QuadratureCovariance named(Eigen::MatrixXd::Identity(4, 4),
                                     {"B2", "B1"});
    EXPECT_EQ(named.labels()[0], "B2");
    EXPECT_THROW(
        QuadratureCovariance(Eigen::MatrixXd::Identity(4, 4), {"only-one"}),
        invalid_argument);
}

TEST(QuadratureCovarianceCtor, BlockAccessChecksRange) {
    const QuadratureCovariance g(Eigen::MatrixXd::Identity(4, 4));
    EXPECT_NO_THROW(g.block(1, 0));
    EXPECT_THROW(g.block(2, 0), invalid_argument);
    EXPECT_THROW(g.block(0, -1), invalid_argument);
}

TEST(SymplecticEigenvalues, VacuumIsAllOnes) {
    const auto nu = symplectic_eigenvalues(vacuum_state(3));
    ASSERT_EQ(nu.size(), 3u);
    for (double v : nu) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(SymplecticEigenvalues, ThermalModeIsItsVariance) {
    const auto nu = symplectic_eigenvalues(thermal_state(20.0));
    ASSERT_EQ(nu.size(), 1u);
    EXPECT_NEAR(nu[0], 20.0, 1e-12);
}

TEST(SymplecticEigenvalues, TwoModeSqueezedVacuumIsPure) {
    const auto nu = symplectic_eigenvalues(tmsv_state(20.0));
    ASSERT_EQ(nu.size(), 2u);
    EXPECT_NEAR(nu[0], 1.0, 1e-12);
    EXPECT_NEAR(nu[1], 1.0, 1e-12);
}

TEST(SymplecticEigenvalues, SortedDescending) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(6, 6);
    g(0, 0) = g(1, 1) = 3.0;
    g(2, 2) = g(3, 3) = 9.0;
    g(4, 4) = g(5, 5) = 5.0;
    const auto nu = symplectic_eigenvalues(QuadratureCovariance(g));
    ASSERT_EQ(nu.size(), 3u);
    EXPECT_NEAR(nu[0], 9.0, 1e-12);
    EXPECT_NEAR(nu[1], 5.0, 1e-12);
    EXPECT_NEAR(nu[2], 3.0, 1e-12);
}

TEST(SymplecticEigenvalues, InvariantUnderSymplecticConjugation) {
    std::mt19937_64 rng(20260819);
    for (int n = 1; n <= 4; ++n) {
        for (int rep = 0; rep < 5; ++rep) {
            const auto gamma = random_state(n, rng);
            const auto before = symplectic_eigenvalues(gamma);
            const auto after = symplectic_eigenvalues(
                apply_symplectic(random_symplectic(n, rng), gamma));
            for (std::size_t i = 0; i < before.size(); ++i) {
                EXPECT_NEAR(after[i], before[i],
                            1e-9 * before[i] + 1e-11);
            }
        }
    }
}

TEST(EntropyG, AnchorsAndPureLimit) {
    EXPECT_DOUBLE_EQ(entropy_G(1.0), 0.0);
    EXPECT_NEAR(entropy_G(2.0), ref::kG2, 1e-12 * ref::kG2);
    EXPECT_NEAR(entropy_G(20.0), ref::kG20, 1e-12 * ref::kG20);
}

TEST(EntropyG, HighPrecisionAcrossTwelveDecades) {
    for (const auto& pair : ref::kEntropyGrid) {
        const double lambda = pair[0];
        const double expected = pair[1];
        EXPECT_NEAR(entropy_G(lambda), expected, 1e-12 * expected)
            << "lambda = " << lambda;
    }
}

TEST(EntropyG, StrictlyIncreasing) {
    double prev = entropy_G(1.0);
    for (double lambda : {1.0 + 1e-9, 1.0001, 1.5, 3.0, 50.0, 1e4}) {
        const double cur = entropy_G(lambda);
        EXPECT_GT(cur, prev) << "lambda = " << lambda;
        prev = cur;
    }
}

TEST(EntropyG, ClampsJustBelowOneAndRejectsLower) {
    EXPECT_DOUBLE_EQ(entropy_G(1.0 - 5e-10), 0.0);
    EXPECT_THROW(entropy_G(1.0 - 1e-8), unphysical_eigenvalue);
    EXPECT_THROW(entropy_G(0.0), unphysical_eigenvalue);
}

TEST(VonNeumannEntropy, ThermalAndProductStates) {
    EXPECT_NEAR(von_neumann_entropy(thermal_state(20.0)), ref::kG20,
                1e-12 * ref::kG20);
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(4, 4);
    g(0, 0) = g(1, 1) = 20.0;
    g(2, 2) = g(3, 3) = 2.0;
    EXPECT_NEAR(von_neumann_entropy(QuadratureCovariance(g)),
                ref::kG20 + ref::kG2, 1e-11);
}

TEST(VonNeumannEntropy, PureTwoModeSqueezedStatesHaveZeroEntropy) {
    for (double v : {1.0, 2.0, 20.0, 1000.0}) {
        EXPECT_LT(std::abs(von_neumann_entropy(tmsv_state(v))), 1e-8)
            << "V = " << v;
    }
}

TEST(VonNeumannEntropy, RejectsUnphysicalState) {
    EXPECT_THROW(
        von_neumann_entropy(QuadratureCovariance(
            0.5 * Eigen::MatrixXd::Identity(2, 2))),
        unphysical_eigenvalue);
}

TEST(ApplySymplectic, PreservesLabelsAndChecksDimensions) {
    const auto tmsv = tmsv_state(4.0);
    std::mt19937_64 rng(7);
    const auto s = random_symplectic(2, rng);
    EXPECT_EQ(apply_symplectic(s, tmsv).labels(), tmsv.labels());
    EXPECT_THROW(apply_symplectic(s, thermal_state(2.0)), invalid_argument);
}

TEST(SymplecticTransformCtor, RejectsNonSymplectic) {
    EXPECT_THROW(SymplecticTransform(2.0 * Eigen::MatrixXd::Identity(2, 2)),
                 invalid_argument);
    EXPECT_NO_THROW(SymplecticTransform(Eigen::MatrixXd::Identity(4, 4)));
}

TEST(BeamSplitter, ConventionAndMixingRatios) {
    const auto bs = beam_splitter(0.8, 0, 1, 2);
    const auto& s = bs.matrix();
    const double st = std::sqrt(0.8);
    const double sr = std::sqrt(0.2);
    EXPECT_NEAR(s(0, 0), st, 1e-15);
    EXPECT_NEAR(s(0, 2), sr, 1e-15);
    EXPECT_NEAR(s(2, 0), -sr, 1e-15);
    EXPECT_NEAR(s(2, 2), st, 1e-15);

    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(4, 4);
    g(0, 0) = g(1, 1) = 20.0;  // thermal 20 in mode 0, vacuum in mode 1
    const auto out = apply_symplectic(bs, QuadratureCovariance(g));
    EXPECT_NEAR(out.block(0, 0)(0, 0), 16.2, 1e-12);
    EXPECT_NEAR(out.block(0, 0)(1, 1), 16.2, 1e-12);
    EXPECT_NEAR(out.block(1, 1)(0, 0), 4.8, 1e-12);
    EXPECT_NEAR(out.block(1, 1)(1, 1), 4.8, 1e-12);
}

TEST(BeamSplitter, RejectsInvalidArguments) {
    EXPECT_THROW(beam_splitter(1.2, 0, 1, 2), invalid_argument);
    EXPECT_THROW(beam_splitter(-0.1, 0, 1, 2), invalid_argument);
    EXPECT_THROW(beam_splitter(0.5, 0, 0, 2), invalid_argument);
    EXPECT_THROW(beam_splitter(0.5, 0, 2, 2), invalid_argument);
}

TEST(ConditionOnQuadratures, HomodyneOnSqueezedArm) {
    // measuring x of one TMSV arm squeezes the other arm's x to 1/V
    const double v = 20.0;
    const auto cond =
        condition_on_quadratures(tmsv_state(v), {{1, Quadrature::x}});
    ASSERT_EQ(cond.n_modes(), 1);
    EXPECT_NEAR(cond.matrix()(0, 0), 1.0 / v, 1e-12);
    EXPECT_NEAR(cond.matrix()(1, 1), v, 1e-12);
    EXPECT_NEAR(cond.matrix()(0, 1), 0.0, 1e-12);
}

TEST(ConditionOnQuadratures, MatchesManualSchurComplement) {
    std::mt19937_64 rng(11);
    const auto gamma = random_state(3, rng);
    const auto& g = gamma.matrix();
    // measure p of mode 2 (index 5); remaining indices 0..3
    const auto cond =
        condition_on_quadratures(gamma, {{2, Quadrature::p}});
    const Eigen::MatrixXd a = g.topLeftCorner(4, 4);
    const Eigen::VectorXd c = g.block(0, 5, 4, 1);
    const Eigen::MatrixXd expected = a - c * c.transpose() / g(5, 5);
    EXPECT_LT(max_abs_diff(cond.matrix(), expected), 1e-12);
}

TEST(ConditionOnQuadratures, UncorrelatedMeasurementChangesNothing) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(4, 4);
    g(0, 0) = g(1, 1) = 7.0;
    const auto cond = condition_on_quadratures(QuadratureCovariance(g),
                                               {{1, Quadrature::x}});
    EXPECT_LT(max_abs_diff(cond.matrix(),
                           7.0 * Eigen::MatrixXd::Identity(2, 2)),
              1e-14);
}

TEST(ConditionOnQuadratures, EmptyMeasurementIsIdentity) {
    const auto tmsv = tmsv_state(5.0);
    const auto out = condition_on_quadratures(tmsv, {});
    EXPECT_EQ(out.n_modes(), 2);
    EXPECT_LT(max_abs_diff(out.matrix(), tmsv.matrix()), 1e-15);
}

TEST(ConditionOnQuadratures, ValidatesMeasurementList) {
    const auto tmsv = tmsv_state(5.0);
    EXPECT_THROW(condition_on_quadratures(
                     tmsv, {{0, Quadrature::x}, {1, Quadrature::p}}),
                 invalid_argument);  // no mode left
    EXPECT_THROW(condition_on_quadratures(
                     tmsv, {{0, Quadrature::x}, {0, Quadrature::p}}),
                 invalid_argument);  // duplicate mode
    EXPECT_THROW(condition_on_quadratures(tmsv, {{2, Quadrature::x}}),
                 invalid_argument);  // out of range
}

TEST(ConditionOnQuadratures, KeepsRemainingLabels) {
    const QuadratureCovariance g(Eigen::MatrixXd::Identity(6, 6),
                                 {"B2", "B1", "A2"});
    const auto cond = condition_on_quadratures(g, {{1, Quadrature::p}});
    EXPECT_EQ(cond.labels(), (std::vector<std::string>{"B2", "A2"}));
}

TEST(HeterodyneSplit, BalancedThermalSplit) {
    const double v = 20.0;
    const auto split = heterodyne_split(thermal_state(v), 0);
    ASSERT_EQ(split.n_modes(), 2);
    EXPECT_LT(max_abs_diff(split.block(0, 0),
                           0.5 * (v + 1.0) * Eigen::Matrix2d::Identity()),
              1e-12);
    EXPECT_LT(max_abs_diff(split.block(1, 1),
                           0.5 * (v + 1.0) * Eigen::Matrix2d::Identity()),
              1e-12);
    // cross block is proportional to the identity with magnitude (V-1)/2;
    // its sign follows this library's beam-splitter convention
    EXPECT_LT(max_abs_diff(split.block(0, 1),
                           -0.5 * (v - 1.0) * Eigen::Matrix2d::Identity()),
              1e-12);
    EXPECT_EQ(split.labels(),
              (std::vector<std::string>{"M1", "M1'"}));
}

TEST(HeterodyneSplit, VacuumStaysVacuum) {
    const auto split = heterodyne_split(vacuum_state(1), 0);
    EXPECT_LT(max_abs_diff(split.matrix(), Eigen::MatrixXd::Identity(4, 4)),
              1e-14);
}

TEST(HeterodyneSplit, FullHeterodyneOfTmsvArmLeavesCoherentState) {
    const auto split = heterodyne_split(tmsv_state(20.0), 0);
    const auto cond = condition_on_quadratures(
        split, {{0, Quadrature::x}, {2, Quadrature::p}});
    ASSERT_EQ(cond.n_modes(), 1);
    EXPECT_LT(max_abs_diff(cond.matrix(), Eigen::MatrixXd::Identity(2, 2)),
              1e-12);
}

TEST(HeterodyneSplit, RejectsBadMode) {
    EXPECT_THROW(heterodyne_split(tmsv_state(2.0), 2), invalid_argument);
}

TEST(PermuteModes, ReordersBlocksAndLabels) {
    std::mt19937_64 rng(3);
    const auto gamma = random_state(4, rng);
    const std::vector<int> perm{2, 0, 3, 1};
    const auto out = permute_modes(gamma, perm);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(out.labels()[static_cast<std::size_t>(i)],
                  gamma.labels()[static_cast<std::size_t>(perm[
                      static_cast<std::size_t>(i)])]);
        for (int j = 0; j < 4; ++j) {
            EXPECT_LT(max_abs_diff(out.block(i, j),
                                   gamma.block(perm[static_cast<std::size_t>(
                                                   i)],
                                               perm[static_cast<std::size_t>(
                                                   j)])),
                      1e-15);
        }
    }
}

TEST(PermuteModes, InverseRoundTrips) {
    std::mt19937_64 rng(5);
    const auto gamma = random_state(3, rng);
    const auto out =
        permute_modes(permute_modes(gamma, {1, 2, 0}), {2, 0, 1});
    EXPECT_LT(max_abs_diff(out.matrix(), gamma.matrix()), 1e-15);
}

TEST(PermuteModes, RejectsNonBijections) {
    const auto gamma = tmsv_state(2.0);
    EXPECT_THROW(permute_modes(gamma, {0}), invalid_argument);
    EXPECT_THROW(permute_modes(gamma, {0, 0}), invalid_argument);
    EXPECT_THROW(permute_modes(gamma, {0, 2}), invalid_argument);
}

TEST(StateConstructors, ValidateVariances) {
    EXPECT_THROW(thermal_state(0.5), invalid_argument);
    EXPECT_THROW(tmsv_state(0.999), invalid_argument);
    EXPECT_THROW(vacuum_state(0), invalid_argument);
}

TEST(StateConstructors, TmsvLayout) {
    const auto g = tmsv_state(3.0).matrix();
    const double c = std::sqrt(8.0);
    EXPECT_DOUBLE_EQ(g(0, 2), c);
    EXPECT_DOUBLE_EQ(g(1, 3), -c);
    EXPECT_DOUBLE_EQ(g(0, 3), 0.0);
    EXPECT_DOUBLE_EQ(g(0, 0), 3.0);
}

TEST(RandomStates, AreAlwaysPhysical) {
    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        const auto gamma = random_state(3, rng);
        const auto nu = symplectic_eigenvalues(gamma);
        EXPECT_GE(nu.back(), 1.0 - 1e-9);
    }
}

}  // namespace
}  // namespace cvqkd
