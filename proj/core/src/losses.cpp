#include "interact/losses.hpp"

namespace interact {

double loss_pred(const PoseTrajectory& pred, const PoseTrajectory& truth) {
  if (!(pred.layout == truth.layout) || pred.length() != truth.length()) {
    throw std::invalid_argument("loss_pred: trajectory shapes differ");
  }
  const Eigen::MatrixXd diff = pred.frames - truth.frames;
  return diff.squaredNorm() / pred.length();
}

double loss_total(double pred, double hist_align, double fut_align, const LossWeights& w) {
  w.validate();
  return w.lambda_p * pred + w.lambda_h * hist_align + w.lambda_f * fut_align;
}

}  // namespace interact
