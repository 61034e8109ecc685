#include "mpclab/ltv_system.hpp"

#include "mpclab/seed.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mpclab {

void SystemSpec::validate() const {
    if (T < 1) throw std::invalid_argument("T must be >= 1, got " + std::to_string(T));
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("dt must be positive, got " + std::to_string(dt));
    if (!(disturbance_std >= 0.0) || !std::isfinite(disturbance_std))
        throw std::invalid_argument("disturbance_std must be >= 0, got " +
                                    std::to_string(disturbance_std));
    if (!x0.allFinite()) throw std::invalid_argument("x0 must be finite");
}

Mat2 state_weight(double t_tilde) {
    Mat2 m;
    m << 1.0 + std::exp(-t_tilde), 0.0,
         0.0, 1.0 + 0.05 * t_tilde;
    return m;
}

Mat2 control_weight(double t_tilde) {
    Mat2 m;
    m << 1.0, 0.0,
         0.0, 1.0 + std::exp(-t_tilde);
    return m;
}

Vec2 reference_state(double t_tilde) { return {std::sin(t_tilde), std::cos(t_tilde)}; }

Mat2 transition_matrix(double t_tilde) {
    const double c = std::cos(t_tilde);
    const double s = std::sin(t_tilde);
    Mat2 m;
    m << c, s,
         -s, c;
    return m;
}

Mat2 input_matrix(double t_tilde) {
    Mat2 m;
    m << 1.0, 0.0,
         0.0, 0.1 + std::exp(-t_tilde);
    return m;
}

StageData stage_data_at(int t_index, double dt, const Vec2& w) {
    const double t_tilde = t_index * dt;
    return StageData{state_weight(t_tilde), control_weight(t_tilde), reference_state(t_tilde),
                     transition_matrix(t_tilde), input_matrix(t_tilde), w};
}

std::vector<Vec2> sample_disturbances(const SystemSpec& spec) {
    spec.validate();
    std::vector<Vec2> out(static_cast<std::size_t>(spec.T), Vec2::Zero());
    if (spec.disturbance_std == 0.0) return out;
    Rng rng = make_rng(spec.base_seed, "disturbance");
    std::normal_distribution<double> normal(0.0, spec.disturbance_std);
    for (Vec2& w : out) {
        w[0] = normal(rng);
        w[1] = normal(rng);
    }
    return out;
}

GroundTruth build_ground_truth(const SystemSpec& spec) {
    const std::vector<Vec2> w = sample_disturbances(spec);
    GroundTruth g;
    g.spec = spec;
    g.stages.reserve(w.size());
    for (int t = 0; t < spec.T; ++t) g.stages.push_back(stage_data_at(t, spec.dt, w[t]));
    const double T_tilde = spec.T * spec.dt;
    g.P_terminal = state_weight(T_tilde);
    g.xbar_terminal = reference_state(T_tilde);
    return g;
}

std::array<double, 4> to_row_major(const Mat2& m) {
    return {m(0, 0), m(0, 1), m(1, 0), m(1, 1)};
}

Mat2 from_row_major(std::span<const double> v) {
    if (v.size() != 4) throw DimensionMismatch("2x2 matrix needs 4 entries");
    Mat2 m;
    m << v[0], v[1],
         v[2], v[3];
    return m;
}

namespace {

void put(FlatStage& out, int offset, const Mat2& m) {
    const auto rm = to_row_major(m);
    for (int i = 0; i < 4; ++i) out[offset + i] = rm[i];
}

Mat2 take(const Eigen::Ref<const Eigen::VectorXd>& v, int offset) {
    return from_row_major(std::span<const double>(v.data() + offset, 4));
}

} // namespace

FlatStage flatten_stage(const StageData& s) {
    FlatStage out;
    put(out, flat_offset::Q, s.Q);
    put(out, flat_offset::R, s.R);
    out.segment<2>(flat_offset::xbar) = s.xbar;
    put(out, flat_offset::A, s.A);
    put(out, flat_offset::B, s.B);
    out.segment<2>(flat_offset::w) = s.w;
    return out;
}

StageData unflatten_stage(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != kFlatStageSize)
        throw DimensionMismatch("flattened stage needs 20 entries, got " + std::to_string(v.size()));
    StageData s;
    s.Q = take(v, flat_offset::Q);
    s.R = take(v, flat_offset::R);
    s.xbar = v.segment<2>(flat_offset::xbar);
    s.A = take(v, flat_offset::A);
    s.B = take(v, flat_offset::B);
    s.w = v.segment<2>(flat_offset::w);
    return s;
}

} // namespace mpclab
