#include "mpclab/riccati.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace mpclab {

namespace {

double stage_cost(const StageData& s, const Vec2& x, const Vec2& u) {
    const Vec2 dx = x - s.xbar;
    return dx.dot(s.Q * dx) + u.dot(s.R * u);
}

double terminal_cost(const Mat2& P, const Vec2& xbar, const Vec2& x) {
    const Vec2 dx = x - xbar;
    return dx.dot(P * dx);
}

} // namespace

double AffinePolicy::value(int t, const Vec2& x) const {
    if (t < t_begin || t > t_end)
        throw IndexOutOfWindow("time " + std::to_string(t) + " outside value window [" +
                               std::to_string(t_begin) + ", " + std::to_string(t_end) + "]");
    const auto i = static_cast<std::size_t>(t - t_begin);
    return x.dot(P[i] * x) + 2.0 * p[i].dot(x) + c[i];
}

AffinePolicy riccati_backward(std::span<const StageData> window, const Mat2& terminal_P,
                              const Vec2& terminal_xbar, int t_begin) {
    const std::size_t n = window.size();
    AffinePolicy pol;
    pol.t_begin = t_begin;
    pol.t_end = t_begin + static_cast<int>(n);
    pol.K.resize(n);
    pol.kff.resize(n);
    pol.P.resize(n + 1);
    pol.p.resize(n + 1);
    pol.c.resize(n + 1);
    pol.terminal_P = terminal_P;
    pol.terminal_xbar = terminal_xbar;

    Mat2 P = symmetrized(terminal_P);
    Vec2 p = -P * terminal_xbar;
    double c = terminal_xbar.dot(P * terminal_xbar);
    pol.P[n] = P;
    pol.p[n] = p;
    pol.c[n] = c;

    for (std::size_t i = n; i-- > 0;) {
        const StageData& s = window[i];
        const Mat2 Q = symmetrized(s.Q);
        const Mat2 Rbar = symmetrized(symmetrized(s.R) + s.B.transpose() * P * s.B);

        const double min_eig = Eigen::SelfAdjointEigenSolver<Mat2>(Rbar, Eigen::EigenvaluesOnly)
                                   .eigenvalues()
                                   .minCoeff();
        if (!(min_eig > kPdTolerance)) throw NotPositiveDefinite(i, min_eig);

        const Mat2 G = s.B.transpose() * P * s.A;
        const Vec2 next_lin = P * s.w + p;
        const Vec2 h = s.B.transpose() * next_lin;
        const Eigen::LLT<Mat2> chol(Rbar);
        const Mat2 K = -chol.solve(G);
        const Vec2 kff = -chol.solve(h);

        const double c_next = s.xbar.dot(Q * s.xbar) + s.w.dot(P * s.w) + 2.0 * p.dot(s.w) + c +
                              h.dot(kff);
        const Vec2 p_next = -Q * s.xbar + s.A.transpose() * next_lin + G.transpose() * kff;
        const Mat2 P_next = symmetrized(Q + s.A.transpose() * P * s.A + G.transpose() * K);

        P = P_next;
        p = p_next;
        c = c_next;
        pol.K[i] = K;
        pol.kff[i] = kff;
        pol.P[i] = P;
        pol.p[i] = p;
        pol.c[i] = c;
    }
    return pol;
}

Vec2 optimal_action(const AffinePolicy& policy, int t, const Vec2& x) {
    if (t < policy.t_begin || t >= policy.t_end)
        throw IndexOutOfWindow("time " + std::to_string(t) + " outside policy window [" +
                               std::to_string(policy.t_begin) + ", " +
                               std::to_string(policy.t_end) + ")");
    const auto i = static_cast<std::size_t>(t - policy.t_begin);
    return policy.K[i] * x + policy.kff[i];
}

Trajectory rollout(const AffinePolicy& policy, std::span<const StageData> window,
                   const Vec2& x_init) {
    if (static_cast<int>(window.size()) != policy.length())
        throw DimensionMismatch("rollout: window has " + std::to_string(window.size()) +
                                " stages but policy covers " + std::to_string(policy.length()));
    Trajectory traj;
    traj.states.reserve(window.size() + 1);
    traj.controls.reserve(window.size());
    traj.stage_costs.reserve(window.size());
    traj.states.push_back(x_init);
    double total = 0.0;
    for (std::size_t i = 0; i < window.size(); ++i) {
        const StageData& s = window[i];
        const Vec2& x = traj.states.back();
        const Vec2 u = policy.K[i] * x + policy.kff[i];
        const double cost = stage_cost(s, x, u);
        traj.controls.push_back(u);
        traj.stage_costs.push_back(cost);
        total += cost;
        traj.states.push_back(s.A * x + s.B * u + s.w);
    }
    traj.terminal_cost =
        terminal_cost(policy.terminal_P, policy.terminal_xbar, traj.states.back());
    traj.total_cost = total + traj.terminal_cost;
    return traj;
}

double evaluate_cost(std::span<const Vec2> states, std::span<const Vec2> controls,
                     std::span<const StageData> window, const Mat2& terminal_P,
                     const Vec2& terminal_xbar) {
    if (controls.size() != window.size() || states.size() != window.size() + 1)
        throw DimensionMismatch("evaluate_cost: expected " + std::to_string(window.size() + 1) +
                                " states and " + std::to_string(window.size()) +
                                " controls, got " + std::to_string(states.size()) + " and " +
                                std::to_string(controls.size()));
    double total = 0.0;
    for (std::size_t i = 0; i < window.size(); ++i) total += stage_cost(window[i], states[i], controls[i]);
    return total + terminal_cost(terminal_P, terminal_xbar, states.back());
}

Trajectory solve_kkt_dense(std::span<const StageData> window, const Mat2& terminal_P,
                           const Vec2& terminal_xbar, const Vec2& x_init) {
    const int N = static_cast<int>(window.size());
    if (N > kMaxKktWindow)
        throw DimensionMismatch("solve_kkt_dense: window length " + std::to_string(N) +
                                " exceeds " + std::to_string(kMaxKktWindow));

    // z = [x_0 .. x_N, u_0 .. u_{N-1}], constraints: x_0 = x_init and the N
    // dynamics equations.
    const int nx = 2 * (N + 1);
    const int nz = nx + 2 * N;
    const int nc = 2 * (N + 1);
    const auto xi = [](int t) { return 2 * t; };
    const auto ui = [nx](int t) { return nx + 2 * t; };

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nz, nz);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nz);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nc, nz);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(nc);

    // objective 0.5 z'Hz + g'z (constant dropped)
    for (int t = 0; t < N; ++t) {
        const StageData& s = window[static_cast<std::size_t>(t)];
        const Mat2 Q = symmetrized(s.Q);
        H.block<2, 2>(xi(t), xi(t)) = 2.0 * Q;
        g.segment<2>(xi(t)) = -2.0 * Q * s.xbar;
        H.block<2, 2>(ui(t), ui(t)) = 2.0 * symmetrized(s.R);
    }
    const Mat2 PT = symmetrized(terminal_P);
    H.block<2, 2>(xi(N), xi(N)) = 2.0 * PT;
    g.segment<2>(xi(N)) = -2.0 * PT * terminal_xbar;

    C.block<2, 2>(0, xi(0)) = Mat2::Identity();
    d.segment<2>(0) = x_init;
    for (int t = 0; t < N; ++t) {
        const StageData& s = window[static_cast<std::size_t>(t)];
        const int row = 2 * (t + 1);
        C.block<2, 2>(row, xi(t + 1)) = Mat2::Identity();
        C.block<2, 2>(row, xi(t)) = -s.A;
        C.block<2, 2>(row, ui(t)) = -s.B;
        d.segment<2>(row) = s.w;
    }

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nz + nc, nz + nc);
    kkt.topLeftCorner(nz, nz) = H;
    kkt.topRightCorner(nz, nc) = C.transpose();
    kkt.bottomLeftCorner(nc, nz) = C;
    Eigen::VectorXd rhs(nz + nc);
    rhs << -g, d;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) throw SingularKkt("KKT matrix is singular");
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) throw SingularKkt("KKT solve produced non-finite values");

    // A nonsingular KKT system can still describe a saddle point; the reduced
    // Hessian must be positive definite for the stationary point to be a minimum.
    {
        Eigen::FullPivLU<Eigen::MatrixXd> clu(C);
        const Eigen::MatrixXd Z = clu.kernel();
        const Eigen::MatrixXd reduced = Z.transpose() * H * Z;
        const Eigen::MatrixXd sym = 0.5 * (reduced + reduced.transpose());
        const double min_eig =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly)
                .eigenvalues()
                .minCoeff();
        if (!(min_eig > kPdTolerance))
            throw SingularKkt("reduced Hessian not positive definite (min eigenvalue " +
                              std::to_string(min_eig) + ")");
    }

    Trajectory traj;
    for (int t = 0; t <= N; ++t) traj.states.emplace_back(sol.segment<2>(xi(t)));
    for (int t = 0; t < N; ++t) traj.controls.emplace_back(sol.segment<2>(ui(t)));
    double total = 0.0;
    for (int t = 0; t < N; ++t) {
        const double cost = stage_cost(window[static_cast<std::size_t>(t)], traj.states[t],
                                       traj.controls[t]);
        traj.stage_costs.push_back(cost);
        total += cost;
    }
    traj.terminal_cost = terminal_cost(terminal_P, terminal_xbar, traj.states.back());
    traj.total_cost = total + traj.terminal_cost;
    return traj;
}

} // namespace mpclab
