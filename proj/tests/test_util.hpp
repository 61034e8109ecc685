#pragma once

#include "mpclab/ltv_system.hpp"
#include "mpclab/prediction_noise.hpp"

#include <random>

namespace mpclab::testing {

inline GroundTruth seeded_truth(int T, std::uint64_t seed, Vec2 x0 = Vec2::Zero()) {
    SystemSpec spec;
    spec.T = T;
    spec.base_seed = seed;
    spec.x0 = x0;
    return build_ground_truth(spec);
}

inline Vec2 random_vec(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    const double a = d(rng);
    const double b = d(rng);
    return {a, b};
}

inline Mat2 random_mat(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    Mat2 m;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) m(r, c) = d(rng);
    return m;
}

/// One stage where every matrix is the identity and all offsets are zero.
inline StageData identity_stage() {
    return StageData{Mat2::Identity(), Mat2::Identity(), Vec2::Zero(),
                     Mat2::Identity(), Mat2::Identity(), Vec2::Zero()};
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace mpclab::testing
