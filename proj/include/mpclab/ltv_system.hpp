#pragma once

#include "mpclab/types.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace mpclab {

/// Problem data of one time step: stage cost (x - xbar)'Q(x - xbar) + u'Ru
/// and dynamics x+ = Ax + Bu + w.
struct StageData {
    Mat2 Q = Mat2::Zero();
    Mat2 R = Mat2::Zero();
    Vec2 xbar = Vec2::Zero();
    Mat2 A = Mat2::Zero();
    Mat2 B = Mat2::Zero();
    Vec2 w = Vec2::Zero();

    bool operator==(const StageData&) const = default;
};

struct SystemSpec {
    int T = 100;
    double dt = 0.1;
    Vec2 x0 = Vec2::Zero();
    double disturbance_std = 0.2;
    std::uint64_t base_seed = 0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Stage data for steps 0..T-1 followed by the terminal cost
/// (x_T - xbar_T)' P_T (x_T - xbar_T).
struct ProblemData {
    std::vector<StageData> stages;
    Mat2 P_terminal = Mat2::Zero();
    Vec2 xbar_terminal = Vec2::Zero();

    int horizon() const { return static_cast<int>(stages.size()); }
    bool operator==(const ProblemData&) const = default;
};

struct GroundTruth : ProblemData {
    SystemSpec spec;
};

// Closed forms evaluated at system time t_tilde = t * dt.
Mat2 state_weight(double t_tilde);
Mat2 control_weight(double t_tilde);
Vec2 reference_state(double t_tilde);
Mat2 transition_matrix(double t_tilde);
Mat2 input_matrix(double t_tilde);

StageData stage_data_at(int t_index, double dt, const Vec2& w);

/// Gaussian disturbances from the "disturbance" substream of spec.base_seed.
/// The stream does not depend on T, so a shorter episode sees a prefix of a
/// longer one.
std::vector<Vec2> sample_disturbances(const SystemSpec& spec);

GroundTruth build_ground_truth(const SystemSpec& spec);

// Fixed 20-coordinate layout: Q(4, row-major), R(4), xbar(2), A(4), B(4), w(2).
inline constexpr int kFlatStageSize = 20;
using FlatStage = Eigen::Matrix<double, kFlatStageSize, 1>;

namespace flat_offset {
inline constexpr int Q = 0;
inline constexpr int R = 4;
inline constexpr int xbar = 8;
inline constexpr int A = 10;
inline constexpr int B = 14;
inline constexpr int w = 18;
} // namespace flat_offset

FlatStage flatten_stage(const StageData& s);
StageData unflatten_stage(const Eigen::Ref<const Eigen::VectorXd>& v);

// Row-major flat forms used by every serialized matrix.
std::array<double, 4> to_row_major(const Mat2& m);
Mat2 from_row_major(std::span<const double> v);

} // namespace mpclab
