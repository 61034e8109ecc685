#pragma once

#include "mpclab/ltv_system.hpp"

#include <span>
#include <vector>

namespace mpclab {

/// Optimal affine feedback u_t = K_t x + kff_t over the window [t_begin, t_end)
/// together with the value function V_t(x) = x'P_t x + 2 p_t'x + c_t.
/// P, p and c have one more entry than K: index (t_end - t_begin) holds the
/// terminal cost.
struct AffinePolicy {
    int t_begin = 0;
    int t_end = 0;
    std::vector<Mat2> K;
    std::vector<Vec2> kff;
    std::vector<Mat2> P;
    std::vector<Vec2> p;
    std::vector<double> c;
    // Terminal cost as supplied (before symmetrization).
    Mat2 terminal_P = Mat2::Zero();
    Vec2 terminal_xbar = Vec2::Zero();

    int length() const { return t_end - t_begin; }

    /// Value at absolute time t (t_begin <= t <= t_end).
    double value(int t, const Vec2& x) const;
};

struct Trajectory {
    std::vector<Vec2> states;
    std::vector<Vec2> controls;
    std::vector<double> stage_costs;
    double terminal_cost = 0.0;
    double total_cost = 0.0;
};

/// Minimum eigenvalue a symmetrized control Hessian must exceed.
inline constexpr double kPdTolerance = 1e-9;

/// Backward affine Riccati recursion for
///   sum_t (x_t - xbar_t)'Q_t(x_t - xbar_t) + u_t'R_t u_t + (x_N - xbar_T)'P_T(x_N - xbar_T)
/// subject to x_{t+1} = A_t x_t + B_t u_t + w_t. Q, R and P_T are symmetrized on
/// entry; nothing is clipped. Throws NotPositiveDefinite when a control Hessian
/// R + B'P'B fails the kPdTolerance test.
AffinePolicy riccati_backward(std::span<const StageData> window, const Mat2& terminal_P,
                              const Vec2& terminal_xbar, int t_begin = 0);

/// Simulates the policy on `window` from x_init; costs use the same data and
/// the policy's terminal cost.
Trajectory rollout(const AffinePolicy& policy, std::span<const StageData> window,
                   const Vec2& x_init);

/// Exact objective for externally supplied sequences.
double evaluate_cost(std::span<const Vec2> states, std::span<const Vec2> controls,
                     std::span<const StageData> window, const Mat2& terminal_P,
                     const Vec2& terminal_xbar);

/// Reference solver: assembles the full equality-constrained QP over all states
/// and controls and solves its KKT system in one dense factorization. Meant for
/// tests (window length <= 50).
Trajectory solve_kkt_dense(std::span<const StageData> window, const Mat2& terminal_P,
                           const Vec2& terminal_xbar, const Vec2& x_init);

inline constexpr int kMaxKktWindow = 50;

/// K_t x + kff_t for absolute time t inside the policy window.
Vec2 optimal_action(const AffinePolicy& policy, int t, const Vec2& x);

} // namespace mpclab
