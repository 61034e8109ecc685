#include "mpclab/ltv_system.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace mpclab;
using mpclab::testing::max_abs;

TEST(StageData, InitialStepClosedForm) {
    const StageData s = stage_data_at(0, 0.1, Vec2::Zero());
    EXPECT_EQ(s.Q, (Mat2() << 2, 0, 0, 1).finished());
    EXPECT_EQ(s.R, (Mat2() << 1, 0, 0, 2).finished());
    EXPECT_EQ(s.xbar, Vec2(0, 1));
    EXPECT_EQ(s.A, Mat2::Identity());
    EXPECT_EQ(s.B, (Mat2() << 1, 0, 0, 1.1).finished());
    EXPECT_EQ(s.w, Vec2::Zero());
}

TEST(StageData, LateStepRotationAndWeights) {
    const StageData s = stage_data_at(100, 0.1, Vec2::Zero());
    Mat2 expected_A;
    expected_A << std::cos(10.0), std::sin(10.0), -std::sin(10.0), std::cos(10.0);
    EXPECT_LE(max_abs(s.A - expected_A), 1e-12);
    EXPECT_LE(max_abs(s.A.transpose() * s.A - Mat2::Identity()), 1e-12);
    EXPECT_NEAR(s.Q(1, 1), 1.5, 1e-12);
    EXPECT_EQ(s.R(0, 0), 1.0);
}

TEST(StageData, CarriesSuppliedDisturbance) {
    const StageData s = stage_data_at(3, 0.1, Vec2(0.25, -0.5));
    EXPECT_EQ(s.w, Vec2(0.25, -0.5));
}

TEST(Disturbances, ZeroStdGivesZeros) {
    SystemSpec spec;
    spec.T = 50;
    spec.disturbance_std = 0.0;
    for (const Vec2& w : sample_disturbances(spec)) EXPECT_EQ(w, Vec2::Zero());
}

TEST(Disturbances, Deterministic) {
    SystemSpec spec;
    spec.T = 200;
    spec.base_seed = 42;
    EXPECT_EQ(sample_disturbances(spec), sample_disturbances(spec));
    spec.base_seed = 43;
    SystemSpec other = spec;
    other.base_seed = 42;
    EXPECT_NE(sample_disturbances(spec), sample_disturbances(other));
}

TEST(Disturbances, ShorterEpisodeIsPrefix) {
    SystemSpec a;
    a.T = 40;
    SystemSpec b = a;
    b.T = 200;
    const auto wa = sample_disturbances(a);
    const auto wb = sample_disturbances(b);
    for (std::size_t i = 0; i < wa.size(); ++i) EXPECT_EQ(wa[i], wb[i]);
}

TEST(Disturbances, MonteCarloStandardDeviation) {
    SystemSpec spec;
    spec.T = 100000;
    spec.base_seed = 0;
    const auto w = sample_disturbances(spec);
    double sum = 0.0, sq = 0.0;
    for (const Vec2& v : w) {
        sum += v.sum();
        sq += v.squaredNorm();
    }
    const double n = 2.0 * static_cast<double>(w.size());
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    EXPECT_GE(sd, 0.19);
    EXPECT_LE(sd, 0.21);
}

TEST(GroundTruth, SingleStepTerminalCost) {
    SystemSpec spec;
    spec.T = 1;
    spec.base_seed = 9;
    const GroundTruth g = build_ground_truth(spec);
    ASSERT_EQ(g.stages.size(), 1u);
    Mat2 expected;
    expected << 1.0 + std::exp(-0.1), 0.0, 0.0, 1.005;
    EXPECT_LE(max_abs(g.P_terminal - expected), 1e-15);
    EXPECT_LE((g.xbar_terminal - Vec2(std::sin(0.1), std::cos(0.1))).norm(), 1e-15);
}

TEST(GroundTruth, StageInvariantsHoldEverywhere) {
    const GroundTruth g = mpclab::testing::seeded_truth(200, 5);
    for (int t = 0; t < g.horizon(); ++t) {
        const StageData& s = g.stages[t];
        const double tt = t * 0.1;
        EXPECT_EQ(s.Q, s.Q.transpose());
        EXPECT_EQ(s.R, s.R.transpose());
        const Eigen::Vector2d q_eig = s.Q.selfadjointView<Eigen::Lower>().eigenvalues();
        const Eigen::Vector2d r_eig = s.R.selfadjointView<Eigen::Lower>().eigenvalues();
        EXPECT_GE(q_eig.minCoeff(), 1.0 - 1e-12);
        EXPECT_LE(q_eig.maxCoeff(), std::max(2.0, 1.0 + 0.05 * tt) + 1e-12);
        EXPECT_GE(r_eig.minCoeff(), 1.0 - 1e-12);
        EXPECT_LE(max_abs(s.A.transpose() * s.A - Mat2::Identity()), 1e-12);
        EXPECT_EQ(s.B(0, 1), 0.0);
        EXPECT_EQ(s.B(1, 0), 0.0);
        EXPECT_EQ(s.B(0, 0), 1.0);
        EXPECT_NEAR(s.B(1, 1), 0.1 + std::exp(-tt), 1e-15);
        EXPECT_NEAR(s.xbar.norm(), 1.0, 1e-12);
    }
    const Eigen::Vector2d p_eig = g.P_terminal.selfadjointView<Eigen::Lower>().eigenvalues();
    EXPECT_GE(p_eig.minCoeff(), 1.0);
    EXPECT_EQ(g.P_terminal, g.P_terminal.transpose());
}

TEST(GroundTruth, DeterministicBuild) {
    EXPECT_EQ(static_cast<const ProblemData&>(mpclab::testing::seeded_truth(80, 3)),
              static_cast<const ProblemData&>(mpclab::testing::seeded_truth(80, 3)));
}

TEST(SystemSpec, RejectsInvalidValues) {
    SystemSpec spec;
    spec.T = 0;
    EXPECT_THROW(spec.validate(), std::invalid_argument);
    spec = SystemSpec{};
    spec.dt = 0.0;
    EXPECT_THROW(build_ground_truth(spec), std::invalid_argument);
    spec = SystemSpec{};
    spec.disturbance_std = -0.1;
    EXPECT_THROW(sample_disturbances(spec), std::invalid_argument);
}

TEST(FlatStage, InitialStageLayout) {
    const FlatStage f = flatten_stage(stage_data_at(0, 0.1, Vec2(0.3, -0.4)));
    const double expected[] = {2, 0, 0, 1, 1, 0, 0, 2, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1.1, 0.3, -0.4};
    for (int i = 0; i < kFlatStageSize; ++i) EXPECT_DOUBLE_EQ(f[i], expected[i]) << "coordinate " << i;
}

TEST(FlatStage, RoundTripIsExact) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        StageData s{mpclab::testing::random_mat(rng, 3), mpclab::testing::random_mat(rng, 3),
                    mpclab::testing::random_vec(rng, 3), mpclab::testing::random_mat(rng, 3),
                    mpclab::testing::random_mat(rng, 3), mpclab::testing::random_vec(rng, 3)};
        EXPECT_EQ(unflatten_stage(flatten_stage(s)), s);
    }
}

TEST(FlatStage, ZeroVectorIsZeroStage) {
    EXPECT_EQ(unflatten_stage(Eigen::VectorXd::Zero(kFlatStageSize)), StageData{});
    EXPECT_THROW(unflatten_stage(Eigen::VectorXd::Zero(19)), DimensionMismatch);
}
