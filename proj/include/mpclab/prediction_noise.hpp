#pragma once

#include "mpclab/ltv_system.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mpclab {

enum class NoiseSetting { DisturbanceOnly, AllData };

/// "disturbance" / "all"
std::string_view to_string(NoiseSetting s);
/// Accepts "disturbance" and "all"; throws std::invalid_argument otherwise.
NoiseSetting parse_noise_setting(std::string_view s);

/// Predicted problem data handed to the online controller. Predictions are a
/// single fixed copy per episode: the prediction of step t+tau made at time t
/// is stages[t+tau] for every t.
struct PredictedData : ProblemData {
    /// NaN when the data did not come from noise injection.
    double epsilon = 0.0;
    /// Empty for learned predictions.
    std::optional<NoiseSetting> setting;
    std::uint64_t noise_seed = 0;

    /// "disturbance", "all" or "nn".
    std::string source() const;
};

/// Adds i.i.d. U(-epsilon, epsilon) noise to each scalar entry of the fields
/// the setting covers. DisturbanceOnly touches w only; AllData touches Q, R,
/// xbar, A, B, w of every stage and the terminal P and xbar. Stages are drawn
/// in time order before the terminal cost, so shorter episodes see a prefix of
/// the noise of longer ones.
PredictedData inject_noise(const GroundTruth& truth, double epsilon, NoiseSetting setting,
                           std::uint64_t noise_seed);

/// Euclidean norm of the 20-coordinate flattened residual per stage.
std::vector<double> prediction_error_profile(const ProblemData& pred, const ProblemData& truth);

} // namespace mpclab
