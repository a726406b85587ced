#pragma once

#include <Eigen/Core>

#include "interact/pose.hpp"

namespace interact {

/// Orthonormal DCT-II basis of size T. Row k holds
///   C(k, t) = a_k * cos(pi * (2t + 1) * k / (2T)),
/// with a_0 = sqrt(1/T) and a_k = sqrt(2/T) for k > 0, so C * C^T = I.
Eigen::MatrixXd dct_matrix(int t_len);

/// Per-channel DCT along the time axis: output(k, c) of a T x C matrix is the
/// k-th cosine coefficient of channel c. No coefficients are truncated.
Eigen::MatrixXd dct_forward(const Eigen::MatrixXd& frames);
Eigen::MatrixXd dct_forward(const PoseTrajectory& traj);

/// Exact inverse of dct_forward (the transpose of the orthonormal basis).
Eigen::MatrixXd dct_inverse(const Eigen::MatrixXd& coeffs);
PoseTrajectory dct_inverse(const Eigen::MatrixXd& coeffs, const JointLayout& layout,
                           double frame_hz = 15.0);

}  // namespace interact
