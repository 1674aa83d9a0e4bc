#pragma once

#include <Eigen/Dense>

namespace jitdp {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

/// Width of the categorical one-hot block: fix(2) + weekday(7) + change-kind mix(4).
inline constexpr int kCategoricalDim = 13;
/// Number of standardised numeric change metrics (all but FIX).
inline constexpr int kNumericalDim = 13;

}  // namespace jitdp
