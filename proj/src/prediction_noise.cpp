#include "mpclab/prediction_noise.hpp"

#include "mpclab/seed.hpp"

#include <cmath>
#include <stdexcept>

namespace mpclab {

std::string_view to_string(NoiseSetting s) {
    switch (s) {
    case NoiseSetting::DisturbanceOnly: return "disturbance";
    case NoiseSetting::AllData: return "all";
    }
    return "unknown";
}

NoiseSetting parse_noise_setting(std::string_view s) {
    if (s == "disturbance") return NoiseSetting::DisturbanceOnly;
    if (s == "all") return NoiseSetting::AllData;
    throw std::invalid_argument("unknown noise setting '" + std::string(s) +
                                "' (expected 'disturbance' or 'all')");
}

std::string PredictedData::source() const {
    return setting ? std::string(to_string(*setting)) : std::string("nn");
}

namespace {

// Open interval (-eps, eps): the lower endpoint uniform_real_distribution can
// return is rejected.
class OpenUniform {
public:
    OpenUniform(Rng& rng, double eps) : rng_(rng), dist_(-eps, eps), eps_(eps) {}

    double operator()() {
        double v = dist_(rng_);
        while (std::abs(v) >= eps_) v = dist_(rng_);
        return v;
    }

    template <typename Derived>
    void perturb(Eigen::MatrixBase<Derived>& m) {
        // row-major draw order, matching the flattened layout
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) += (*this)();
    }

private:
    Rng& rng_;
    std::uniform_real_distribution<double> dist_;
    double eps_;
};

} // namespace

PredictedData inject_noise(const GroundTruth& truth, double epsilon, NoiseSetting setting,
                           std::uint64_t noise_seed) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("epsilon must be >= 0, got " + std::to_string(epsilon));

    PredictedData pred;
    static_cast<ProblemData&>(pred) = static_cast<const ProblemData&>(truth);
    pred.epsilon = epsilon;
    pred.setting = setting;
    pred.noise_seed = noise_seed;
    if (epsilon == 0.0) return pred;

    Rng rng = make_rng(noise_seed, "prediction-noise",
                       {static_cast<std::uint64_t>(setting), double_bits(epsilon)});
    OpenUniform noise(rng, epsilon);
    for (StageData& s : pred.stages) {
        if (setting == NoiseSetting::AllData) {
            noise.perturb(s.Q);
            noise.perturb(s.R);
            noise.perturb(s.xbar);
            noise.perturb(s.A);
            noise.perturb(s.B);
        }
        noise.perturb(s.w);
    }
    if (setting == NoiseSetting::AllData) {
        noise.perturb(pred.P_terminal);
        noise.perturb(pred.xbar_terminal);
    }
    return pred;
}

std::vector<double> prediction_error_profile(const ProblemData& pred, const ProblemData& truth) {
    if (pred.stages.size() != truth.stages.size())
        throw DimensionMismatch("prediction covers " + std::to_string(pred.stages.size()) +
                                " stages, truth has " + std::to_string(truth.stages.size()));
    std::vector<double> out;
    out.reserve(truth.stages.size());
    for (std::size_t t = 0; t < truth.stages.size(); ++t)
        out.push_back((flatten_stage(pred.stages[t]) - flatten_stage(truth.stages[t])).norm());
    return out;
}

} // namespace mpclab
