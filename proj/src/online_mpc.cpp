#include "mpclab/online_mpc.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

namespace mpclab {

void MpcConfig::validate() const {
    if (k < 1) throw std::invalid_argument("horizon k must be >= 1, got " + std::to_string(k));
    if (!(state_blowup_threshold > 0.0) || !(control_blowup_threshold > 0.0))
        throw std::invalid_argument("blow-up thresholds must be positive");
}

int horizon_from_fraction(double fraction, int T) {
    if (!(fraction > 0.0) || !std::isfinite(fraction))
        throw std::invalid_argument("horizon fraction must be positive, got " +
                                    std::to_string(fraction));
    return std::max(1, static_cast<int>(std::lround(fraction * T)));
}

Vec2 mpc_step(int t, const Vec2& x, const PredictedData& pred, int k, int T) {
    if (t < 0 || t >= T)
        throw IndexOutOfWindow("mpc_step: t=" + std::to_string(t) + " outside [0, " +
                               std::to_string(T) + ")");
    if (k < 1) throw std::invalid_argument("mpc_step: horizon k must be >= 1");
    if (pred.horizon() != T)
        throw DimensionMismatch("mpc_step: prediction covers " + std::to_string(pred.horizon()) +
                                " steps, episode has " + std::to_string(T));
    const int t_end = std::min(t + k, T);
    const std::span<const StageData> window(pred.stages.data() + t,
                                            static_cast<std::size_t>(t_end - t));
    const Mat2& term_P = t_end == T ? pred.P_terminal : pred.stages[t_end].Q;
    const Vec2& term_xbar = t_end == T ? pred.xbar_terminal : pred.stages[t_end].xbar;
    const AffinePolicy pol = riccati_backward(window, term_P, term_xbar, t);
    return optimal_action(pol, t, x);
}

OfflineSolution solve_offline(const GroundTruth& truth) {
    OfflineSolution sol;
    sol.policy = riccati_backward(truth.stages, truth.P_terminal, truth.xbar_terminal);
    sol.trajectory = rollout(sol.policy, truth.stages, truth.spec.x0);
    return sol;
}

RunRecord run_online(const GroundTruth& truth, const PredictedData& pred, const Vec2& x0,
                     const MpcConfig& cfg) {
    const AffinePolicy clairvoyant =
        riccati_backward(truth.stages, truth.P_terminal, truth.xbar_terminal);
    return run_online(truth, clairvoyant, pred, x0, cfg);
}

RunRecord run_online(const GroundTruth& truth, const AffinePolicy& clairvoyant,
                     const PredictedData& pred, const Vec2& x0, const MpcConfig& cfg) {
    cfg.validate();
    const int T = truth.horizon();
    if (pred.horizon() != T)
        throw DimensionMismatch("run_online: prediction covers " + std::to_string(pred.horizon()) +
                                " steps, truth has " + std::to_string(T));
    if (clairvoyant.t_begin != 0 || clairvoyant.t_end != T)
        throw DimensionMismatch("run_online: clairvoyant policy must cover [0, T)");

    RunRecord rec;
    rec.T = T;
    rec.k = cfg.k;
    rec.epsilon = pred.epsilon;
    rec.setting = pred.source();
    rec.truth_seed = truth.spec.base_seed;
    rec.noise_seed = pred.noise_seed;
    rec.states.reserve(static_cast<std::size_t>(T) + 1);
    rec.controls.reserve(static_cast<std::size_t>(T));
    rec.per_step_errors.reserve(static_cast<std::size_t>(T));
    rec.states.push_back(x0);

    const auto diverge = [&rec](int t, std::string reason) {
        rec.diverged = true;
        rec.divergence_step = t;
        rec.divergence_reason = std::move(reason);
        rec.cost_alg = kDivergedCost;
        return rec;
    };

    for (int t = 0; t < T; ++t) {
        const Vec2 x = rec.states.back();
        Vec2 u;
        try {
            u = mpc_step(t, x, pred, cfg.k, T);
        } catch (const NotPositiveDefinite& e) {
            return diverge(t, e.what());
        }
        if (!u.allFinite() || u.lpNorm<Eigen::Infinity>() >= cfg.control_blowup_threshold)
            return diverge(t, "control blow-up");

        const StageData& s = truth.stages[static_cast<std::size_t>(t)];
        rec.controls.push_back(u);
        rec.per_step_errors.push_back((u - optimal_action(clairvoyant, t, x)).norm());
        const Vec2 x_next = s.A * x + s.B * u + s.w;
        rec.states.push_back(x_next);
        if (!x_next.allFinite() || x_next.lpNorm<Eigen::Infinity>() >= cfg.state_blowup_threshold)
            return diverge(t, "state blow-up");
    }

    rec.cost_alg = evaluate_cost(rec.states, rec.controls, truth.stages, truth.P_terminal,
                                 truth.xbar_terminal);
    if (!std::isfinite(rec.cost_alg)) return diverge(T - 1, "non-finite cost");
    return rec;
}

double dynamic_regret(double cost_alg, double cost_opt) {
    if (!std::isfinite(cost_opt)) throw std::invalid_argument("cost_opt must be finite");
    return cost_alg - cost_opt;
}

} // namespace mpclab
