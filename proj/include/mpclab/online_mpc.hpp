#pragma once

#include "mpclab/prediction_noise.hpp"
#include "mpclab/riccati.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mpclab {

struct MpcConfig {
    int k = 10;
    double state_blowup_threshold = 1e6;
    double control_blowup_threshold = 1e6;

    void validate() const;
};

/// Horizon for a fraction of the episode: max(1, round(f * T)).
int horizon_from_fraction(double fraction, int T);

inline constexpr double kDivergedCost = std::numeric_limits<double>::infinity();

struct RunRecord {
    std::vector<Vec2> states;      // T+1 entries unless diverged
    std::vector<Vec2> controls;    // T entries unless diverged
    std::vector<double> per_step_errors;
    double cost_alg = kDivergedCost;
    bool diverged = false;
    std::optional<int> divergence_step;
    std::string divergence_reason;

    // config echo
    int T = 0;
    int k = 0;
    double epsilon = 0.0;
    std::string setting;
    std::uint64_t truth_seed = 0;
    std::uint64_t noise_seed = 0;
};

/// First control of the window [t, min(t+k, T)) solved on the predictions.
/// A window that ends before T is closed with the predicted Q and xbar of the
/// stage at the window end; a window that reaches T uses the predicted terminal
/// cost. Propagates NotPositiveDefinite.
Vec2 mpc_step(int t, const Vec2& x, const PredictedData& pred, int k, int T);

/// Receding-horizon episode against the true system. The clairvoyant policy is
/// the Riccati solution of `truth` over [0, T); pass it in to share it across
/// runs on the same instance.
RunRecord run_online(const GroundTruth& truth, const PredictedData& pred, const Vec2& x0,
                     const MpcConfig& cfg);
RunRecord run_online(const GroundTruth& truth, const AffinePolicy& clairvoyant,
                     const PredictedData& pred, const Vec2& x0, const MpcConfig& cfg);

/// Clairvoyant solution of the whole episode.
struct OfflineSolution {
    AffinePolicy policy;
    Trajectory trajectory;
};
OfflineSolution solve_offline(const GroundTruth& truth);

double dynamic_regret(double cost_alg, double cost_opt);

} // namespace mpclab
