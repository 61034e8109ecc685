#include "mpclab/online_mpc.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace mpclab;
using mpclab::testing::seeded_truth;

namespace {

MpcConfig horizon(int k) {
    MpcConfig cfg;
    cfg.k = k;
    return cfg;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

TEST(MpcStep, FullHorizonWithExactDataIsClairvoyant) {
    const GroundTruth g = seeded_truth(60, 2, Vec2(0.4, -0.8));
    const PredictedData exact = inject_noise(g, 0.0, NoiseSetting::AllData, 0);
    const OfflineSolution opt = solve_offline(g);
    for (int k : {60, 100}) {
        const Vec2 u = mpc_step(0, g.spec.x0, exact, k, g.horizon());
        EXPECT_LE((u - optimal_action(opt.policy, 0, g.spec.x0)).norm(), 1e-9);
    }
}

TEST(MpcStep, LastStepClampsToTerminalWindow) {
    const GroundTruth g = seeded_truth(30, 1);
    const PredictedData p = inject_noise(g, 0.1, NoiseSetting::AllData, 1);
    const Vec2 x(0.3, 0.2);
    const Vec2 u1 = mpc_step(29, x, p, 1, 30);
    for (int k : {2, 5, 100}) EXPECT_EQ(mpc_step(29, x, p, k, 30), u1);
    // explicit one-step problem with the predicted terminal cost
    const AffinePolicy pol = riccati_backward(std::span(p.stages).subspan(29, 1), p.P_terminal,
                                              p.xbar_terminal, 29);
    EXPECT_EQ(optimal_action(pol, 29, x), u1);
}

TEST(MpcStep, IntermediateWindowUsesPredictedStageWeights) {
    const GroundTruth g = seeded_truth(30, 1);
    const PredictedData p = inject_noise(g, 0.1, NoiseSetting::AllData, 1);
    const Vec2 x(0.3, 0.2);
    const AffinePolicy pol = riccati_backward(std::span(p.stages).subspan(5, 4), p.stages[9].Q,
                                              p.stages[9].xbar, 5);
    EXPECT_EQ(mpc_step(5, x, p, 4, 30), optimal_action(pol, 5, x));
}

TEST(MpcStep, ClampedControlsIndependentOfHorizon) {
    const GroundTruth g = seeded_truth(40, 3);
    const PredictedData p = inject_noise(g, 0.05, NoiseSetting::DisturbanceOnly, 1);
    const Vec2 x(-0.1, 0.7);
    for (int t = 30; t < 40; ++t) EXPECT_EQ(mpc_step(t, x, p, 10, 40), mpc_step(t, x, p, 25, 40));
}

TEST(MpcStep, ConstructedIndefiniteCostFails) {
    const GroundTruth g = seeded_truth(100, 0);
    PredictedData p = inject_noise(g, 0.0, NoiseSetting::AllData, 0);
    p.stages[90].R = -Mat2::Identity();
    EXPECT_THROW(mpc_step(90, Vec2::Zero(), p, 5, 100), NotPositiveDefinite);

    const RunRecord rec = run_online(g, p, Vec2::Zero(), horizon(10));
    EXPECT_TRUE(rec.diverged);
    ASSERT_TRUE(rec.divergence_step.has_value());
    EXPECT_EQ(*rec.divergence_step, 81);  // first window [81, 91) containing stage 90
    EXPECT_TRUE(std::isinf(rec.cost_alg));
}

TEST(MpcStep, RejectsBadArguments) {
    const GroundTruth g = seeded_truth(10, 0);
    const PredictedData p = inject_noise(g, 0.0, NoiseSetting::AllData, 0);
    EXPECT_THROW(mpc_step(10, Vec2::Zero(), p, 2, 10), IndexOutOfWindow);
    EXPECT_THROW(mpc_step(-1, Vec2::Zero(), p, 2, 10), IndexOutOfWindow);
    EXPECT_THROW(mpc_step(0, Vec2::Zero(), p, 0, 10), std::invalid_argument);
    EXPECT_THROW(mpc_step(0, Vec2::Zero(), p, 2, 11), DimensionMismatch);
}

TEST(RunOnline, PerfectPredictionFullHorizonIsOptimal) {
    for (int T = 20; T <= 200; T += 20) {
        const GroundTruth g = seeded_truth(T, 0);
        const OfflineSolution opt = solve_offline(g);
        const RunRecord rec =
            run_online(g, inject_noise(g, 0.0, NoiseSetting::DisturbanceOnly, 0), g.spec.x0, horizon(T));
        ASSERT_FALSE(rec.diverged);
        ASSERT_EQ(rec.per_step_errors.size(), static_cast<std::size_t>(T));
        EXPECT_EQ(rec.states.size(), static_cast<std::size_t>(T + 1));
        for (double e : rec.per_step_errors) EXPECT_LE(e, 1e-8);
        const double cost_opt = opt.trajectory.total_cost;
        EXPECT_LE(dynamic_regret(rec.cost_alg, cost_opt), 1e-6 * (1.0 + cost_opt)) << "T=" << T;
    }
}

TEST(RunOnline, PerStepErrorDecaysWithHorizon) {
    const GroundTruth g = seeded_truth(100, 0);
    const PredictedData exact = inject_noise(g, 0.0, NoiseSetting::DisturbanceOnly, 0);
    const double e10 = mean(run_online(g, exact, g.spec.x0, horizon(10)).per_step_errors);
    const double e100 = mean(run_online(g, exact, g.spec.x0, horizon(100)).per_step_errors);
    EXPECT_LE(e100, 1e-8);
    EXPECT_LT(e100, e10);
}

TEST(RunOnline, PerStepErrorUsesOnlineStateWithTrueTail) {
    const GroundTruth g = seeded_truth(50, 5);
    const PredictedData p = inject_noise(g, 0.2, NoiseSetting::AllData, 2);
    const OfflineSolution opt = solve_offline(g);
    const RunRecord rec = run_online(g, p, g.spec.x0, horizon(8));
    ASSERT_FALSE(rec.diverged);
    for (int t = 0; t < 50; ++t) {
        const Vec2 u_opt = optimal_action(opt.policy, t, rec.states[t]);
        EXPECT_DOUBLE_EQ(rec.per_step_errors[t], (rec.controls[t] - u_opt).norm());
        const StageData& s = g.stages[t];
        EXPECT_EQ(rec.states[t + 1], (s.A * rec.states[t] + s.B * rec.controls[t] + s.w).eval());
    }
    EXPECT_DOUBLE_EQ(rec.cost_alg,
                     evaluate_cost(rec.states, rec.controls, g.stages, g.P_terminal, g.xbar_terminal));
}

TEST(RunOnline, LargeAllDataNoiseDivergesForMostSeeds) {
    int diverged = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const GroundTruth g = seeded_truth(100, seed);
        diverged += run_online(g, inject_noise(g, 1.0, NoiseSetting::AllData, seed), g.spec.x0, horizon(50))
                        .diverged;
    }
    EXPECT_GE(diverged, 3);
}

TEST(RunOnline, RegretNonnegativeOnNonDivergedRuns) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const GroundTruth g = seeded_truth(60, seed, Vec2(1.0, -1.0));
        const double cost_opt = solve_offline(g).trajectory.total_cost;
        for (NoiseSetting s : {NoiseSetting::DisturbanceOnly, NoiseSetting::AllData})
            for (double eps : {0.0, 0.01, 0.1, 0.5})
                for (int k : {1, 3, 10, 60}) {
                    const RunRecord rec = run_online(g, inject_noise(g, eps, s, seed), g.spec.x0, horizon(k));
                    if (rec.diverged) continue;
                    EXPECT_GE(dynamic_regret(rec.cost_alg, cost_opt), -1e-6 * (1.0 + std::abs(cost_opt)));
                    for (double e : rec.per_step_errors) EXPECT_GE(e, 0.0);
                }
    }
}

TEST(RunOnline, DivergenceIsDeterministicAndThresholdDriven) {
    const GroundTruth g = seeded_truth(100, 1);
    const PredictedData p = inject_noise(g, 1.0, NoiseSetting::AllData, 1);
    const RunRecord a = run_online(g, p, g.spec.x0, horizon(50));
    const RunRecord b = run_online(g, p, g.spec.x0, horizon(50));
    EXPECT_EQ(a.diverged, b.diverged);
    EXPECT_EQ(a.divergence_step, b.divergence_step);
    EXPECT_EQ(a.states, b.states);

    MpcConfig tight = horizon(10);
    tight.state_blowup_threshold = 0.5;
    const RunRecord c = run_online(g, inject_noise(g, 0.0, NoiseSetting::AllData, 0), Vec2::Zero(), tight);
    EXPECT_TRUE(c.diverged);
    EXPECT_EQ(c.divergence_reason, "state blow-up");
    EXPECT_TRUE(std::isinf(c.cost_alg));
}

TEST(RunOnline, EchoesConfiguration) {
    const GroundTruth g = seeded_truth(20, 7);
    const RunRecord rec = run_online(g, inject_noise(g, 0.05, NoiseSetting::AllData, 99), g.spec.x0, horizon(4));
    EXPECT_EQ(rec.T, 20);
    EXPECT_EQ(rec.k, 4);
    EXPECT_EQ(rec.epsilon, 0.05);
    EXPECT_EQ(rec.setting, "all");
    EXPECT_EQ(rec.truth_seed, 7u);
    EXPECT_EQ(rec.noise_seed, 99u);
    EXPECT_THROW(run_online(g, inject_noise(seeded_truth(21, 7), 0.0, NoiseSetting::AllData, 0),
                            g.spec.x0, horizon(4)),
                 DimensionMismatch);
}

TEST(DynamicRegret, Arithmetic) {
    EXPECT_EQ(dynamic_regret(5.0, 3.0), 2.0);
    EXPECT_EQ(dynamic_regret(4.25, 4.25), 0.0);
    EXPECT_TRUE(std::isinf(dynamic_regret(kDivergedCost, 3.0)));
    EXPECT_THROW(dynamic_regret(1.0, kDivergedCost), std::invalid_argument);
}

TEST(HorizonFromFraction, RoundsAndClamps) {
    EXPECT_EQ(horizon_from_fraction(0.1, 20), 2);
    EXPECT_EQ(horizon_from_fraction(0.5, 100), 50);
    EXPECT_EQ(horizon_from_fraction(1.0, 140), 140);
    EXPECT_EQ(horizon_from_fraction(0.1, 4), 1);
    EXPECT_EQ(horizon_from_fraction(0.1, 1), 1);
    EXPECT_THROW(horizon_from_fraction(0.0, 10), std::invalid_argument);
}
