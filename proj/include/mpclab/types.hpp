#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mpclab {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

/// Raised when the control Hessian R + B'PB of a subproblem is not positive
/// definite after symmetrization. The online controller treats this as
/// divergence.
class NotPositiveDefinite : public std::runtime_error {
public:
    NotPositiveDefinite(std::size_t step, double min_eig)
        : std::runtime_error("control Hessian not positive definite at window step " +
                             std::to_string(step) + " (min eigenvalue " +
                             std::to_string(min_eig) + ")"),
          step_(step), min_eig_(min_eig) {}

    std::size_t step() const { return step_; }
    double min_eig() const { return min_eig_; }

private:
    std::size_t step_;
    double min_eig_;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SingularKkt : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IndexOutOfWindow : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class NonFiniteLoss : public std::runtime_error {
public:
    explicit NonFiniteLoss(long step)
        : std::runtime_error("non-finite training loss at step " + std::to_string(step)),
          step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

inline Mat2 symmetrized(const Mat2& m) { return 0.5 * (m + m.transpose()); }

} // namespace mpclab
