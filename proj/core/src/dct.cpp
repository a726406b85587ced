#include "interact/dct.hpp"

#include <cmath>
#include <stdexcept>

namespace interact {

Eigen::MatrixXd dct_matrix(int t_len) {
  if (t_len < 1) throw std::invalid_argument("dct_matrix: T must be >= 1");
  const double pi = 3.14159265358979323846;
  Eigen::MatrixXd c(t_len, t_len);
  const double a0 = std::sqrt(1.0 / t_len);
  const double ak = std::sqrt(2.0 / t_len);
  for (int k = 0; k < t_len; ++k) {
    const double scale = (k == 0) ? a0 : ak;
    for (int t = 0; t < t_len; ++t) {
      c(k, t) = scale * std::cos(pi * (2.0 * t + 1.0) * k / (2.0 * t_len));
    }
  }
  return c;
}

Eigen::MatrixXd dct_forward(const Eigen::MatrixXd& frames) {
  return dct_matrix(static_cast<int>(frames.rows())) * frames;
}

Eigen::MatrixXd dct_forward(const PoseTrajectory& traj) {
  traj.validate();
  return dct_forward(traj.frames);
}

Eigen::MatrixXd dct_inverse(const Eigen::MatrixXd& coeffs) {
  if (!coeffs.allFinite()) throw std::invalid_argument("dct_inverse: non-finite coefficients");
  return dct_matrix(static_cast<int>(coeffs.rows())).transpose() * coeffs;
}

PoseTrajectory dct_inverse(const Eigen::MatrixXd& coeffs, const JointLayout& layout,
                           double frame_hz) {
  return PoseTrajectory(layout, dct_inverse(coeffs), frame_hz);
}

}  // namespace interact
