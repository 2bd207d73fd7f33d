#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace strip {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

// Strip widths stay small; dense direct solves assume this cap.
inline constexpr int kMaxWidth = 16;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class ErrorKind {
    Model,          // invalid model description
    Embedding,      // jump law cannot be blocked onto the strip
    NearSingular,   // resolvent precondition violated
    NumericalFailure,
    InsufficientWindow,
    Divergence,     // series fails to decay (lambda >= 0 symptom)
    Truncation,     // adaptive truncation failed to converge
    Degeneracy,     // walk trapped / inconsistent with transience
    WindowExhausted,
    Config,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace strip
