#pragma once

#include <stdexcept>

#include "interact/model.hpp"
#include "interact/nn.hpp"
#include "interact/pose.hpp"
#include "interact/tensor.hpp"

namespace interact {

struct LossWeights {
  double lambda_p = 1.0;
  double lambda_h = 0.1;
  double lambda_f = 0.1;

  void validate() const {
    if (lambda_p < 0.0 || lambda_h < 0.0 || lambda_f < 0.0) {
      throw std::invalid_argument("loss weights must be nonnegative");
    }
  }
};

/// Time-averaged squared pose error: (1/T) * sum_t ||pred_t - truth_t||^2.
/// This is the training objective; the evaluation metric fde() stays an
/// unsquared distance.
double loss_pred(const PoseTrajectory& pred, const PoseTrajectory& truth);

/// Weighted sum of the prediction and the two alignment terms.
double loss_total(double pred, double hist_align, double fut_align, const LossWeights& w);

/// Tape version of loss_pred against a constant target (same shape as pred).
template <typename S>
TensorPtr<S> mpjpe_loss(Tape<S>& tape, const TensorPtr<S>& pred,
                        const typename Tensor<S>::Matrix& target) {
  if (pred->rows() != target.rows() || pred->cols() != target.cols()) {
    throw std::invalid_argument("mpjpe_loss: prediction " + detail::shape_str(pred) +
                                " does not match target " +
                                detail::shape_str(static_cast<int>(target.rows()),
                                                  static_cast<int>(target.cols())));
  }
  auto diff = tape.sub(pred, tape.constant(target));
  auto total = tape.sum_all(tape.mul(diff, diff));
  return tape.scale(total, S(1) / static_cast<S>(pred->rows()));
}

/// Mean over pairs of (1 - cosine similarity) between the embedded robot poses
/// and the embedded poses of the humans that drove them; in [0, 2], zero iff
/// every pair embeds to positively colinear vectors.
template <typename S>
TensorPtr<S> embedding_alignment_loss(Tape<S>& tape, const LinearLayer<S>& robot_embed,
                                      const LinearLayer<S>& human_embed,
                                      const typename Tensor<S>::Matrix& robot_poses,
                                      const typename Tensor<S>::Matrix& human_poses) {
  if (robot_poses.rows() == 0 || robot_poses.rows() != human_poses.rows()) {
    throw std::invalid_argument("alignment loss: empty or mismatched pair batch");
  }
  auto robot = robot_embed.forward(tape, tape.constant(robot_poses));
  auto human = human_embed.forward(tape, tape.constant(human_poses));
  auto cos = tape.row_cosine(robot, human);
  auto ones = tape.constant(Tensor<S>::Matrix::Ones(cos->rows(), 1));
  auto total = tape.sum_all(tape.sub(ones, cos));
  return tape.scale(total, S(1) / static_cast<S>(cos->rows()));
}

enum class AlignWhich { Hist, Fut };

/// Routes the pair batch through the model's history or future embedding
/// layers (robot side paired against human side).
template <typename S>
TensorPtr<S> alignment_loss(Tape<S>& tape, const InteractModel<S>& model,
                            const typename Tensor<S>::Matrix& robot_poses,
                            const typename Tensor<S>::Matrix& human_poses,
                            AlignWhich which) {
  const auto& robot = which == AlignWhich::Hist ? model.hist_robot() : model.fut_robot();
  const auto& human = which == AlignWhich::Hist ? model.hist_human() : model.fut_human();
  return embedding_alignment_loss(tape, robot, human, robot_poses, human_poses);
}

/// lambda_p * pred + lambda_h * hist + lambda_f * fut on tape. Null alignment
/// terms contribute nothing (alignment disabled).
template <typename S>
TensorPtr<S> weighted_total_loss(Tape<S>& tape, const TensorPtr<S>& pred,
                                 const TensorPtr<S>& hist_align,
                                 const TensorPtr<S>& fut_align, const LossWeights& w) {
  w.validate();
  auto total = tape.scale(pred, static_cast<S>(w.lambda_p));
  if (hist_align) total = tape.add(total, tape.scale(hist_align, static_cast<S>(w.lambda_h)));
  if (fut_align) total = tape.add(total, tape.scale(fut_align, static_cast<S>(w.lambda_f)));
  return total;
}

}  // namespace interact
