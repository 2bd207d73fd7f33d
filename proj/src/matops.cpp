#include "strip/matops.hpp"

#include <sstream>

namespace strip::matops {

Mat resolvent(const Mat& q, const Mat& eta_prev, const Mat& r) {
    const auto d = q.rows();
    const Mat contraction = q * eta_prev + r;
    const double norm = mat_norm(contraction);
    if (norm >= 1.0 - 1e-10) {
        std::ostringstream msg;
        msg << "resolvent near-singular: ||q*eta + r|| = " << norm;
        fail(ErrorKind::NearSingular, msg.str());
    }
    const Mat m = Mat::Identity(d, d) - contraction;
    Eigen::PartialPivLU<Mat> lu(m);
    Mat out = lu.solve(Mat::Identity(d, d));
    const double residual = mat_norm(m * out - Mat::Identity(d, d));
    if (residual > 1e-10) {
        std::ostringstream msg;
        msg << "resolvent residual " << residual << " exceeds 1e-10";
        fail(ErrorKind::NumericalFailure, msg.str());
    }
    return out;
}

ScaledProduct ScaledProduct::identity(int order, Direction dir) {
    return ScaledProduct(Mat::Identity(order, order), dir);
}

void ScaledProduct::multiply(const Mat& a) {
    if (zero_) return;
    Mat prod = dir_ == Direction::LeftToRight ? Mat(core_ * a) : Mat(a * core_);
    const double norm = mat_norm(prod);
    if (norm == 0.0) {
        zero_ = true;
        log_scale_ = kNegInf;
        core_ = Mat::Zero(prod.rows(), prod.cols());
        return;
    }
    core_ = prod / norm;
    log_scale_ += std::log(norm);
}

}  // namespace strip::matops
