#pragma once

#include "strip/types.hpp"

#include <cmath>

// Dense order-d matrix kernel: the max-absolute-row-sum norm, the resolvent
// solve behind the exit recursion, and log-scaled products for accumulating
// exponentially decaying matrix chains without underflow.

namespace strip::matops {

// Operator norm induced by the sup norm: max_i sum_j |A(i,j)|.
// For nonnegative A this equals the largest entry of A*1.
template <typename Derived>
double mat_norm(const Eigen::MatrixBase<Derived>& a) {
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

// (I - q*eta_prev - r)^{-1} by partial-pivoting LU.
// Requires ||q*eta_prev + r|| < 1 - 1e-10; the result of the solve is checked
// against a residual of 1e-10.
Mat resolvent(const Mat& q, const Mat& eta_prev, const Mat& r);

// Log-scaled matrix product.  The represented value is exp(log_scale) * core
// with ||core|| kept at 1; exact-zero products set the zero flag and a -inf
// log scale.
class ScaledProduct {
public:
    enum class Direction { LeftToRight, RightToLeft };

    static ScaledProduct identity(int order, Direction dir = Direction::LeftToRight);

    void multiply(const Mat& a);

    // log of the norm of the represented product.
    double log_norm() const { return zero_ ? kNegInf : log_scale_ + std::log(matops::mat_norm(core_)); }

    Mat recompose() const { return zero_ ? Mat(Mat::Zero(core_.rows(), core_.cols())) : Mat(std::exp(log_scale_) * core_); }

    double log_scale() const { return log_scale_; }
    const Mat& core() const { return core_; }
    bool is_zero() const { return zero_; }
    Direction direction() const { return dir_; }

private:
    ScaledProduct(Mat core, Direction dir) : core_(std::move(core)), dir_(dir) {}

    Mat core_;
    double log_scale_ = 0.0;
    bool zero_ = false;
    Direction dir_;
};

inline bool is_stochastic(const Mat& a, double tol = 1e-10) {
    if (a.minCoeff() < -tol) return false;
    return (a.rowwise().sum().array() - 1.0).abs().maxCoeff() <= tol;
}

}  // namespace strip::matops
