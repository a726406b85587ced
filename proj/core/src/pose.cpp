#include "interact/pose.hpp"

#include <cmath>
#include <stdexcept>

namespace interact {

std::string to_string(AgentKind kind) {
  return kind == AgentKind::Human ? "human" : "robot";
}

AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "human") return AgentKind::Human;
  if (s == "robot") return AgentKind::Robot;
  throw std::invalid_argument("unknown agent kind '" + s + "'");
}

const JointLayout& JointLayout::human() {
  static const JointLayout layout{
      AgentKind::Human,
      {"upper_back", "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
       "l_wrist", "r_wrist", "l_hand", "r_hand"},
      3};
  return layout;
}

const JointLayout& JointLayout::robot() {
  static const JointLayout layout{
      AgentKind::Robot, {"ee_hand_point", "ee_wrist_point"}, 3};
  return layout;
}

int JointLayout::joint_index(const std::string& name) const {
  for (std::size_t i = 0; i < joint_names.size(); ++i) {
    if (joint_names[i] == name) return static_cast<int>(i);
  }
  throw std::invalid_argument("layout has no joint named '" + name + "'");
}

Pose::Pose(JointLayout l, Eigen::VectorXd c) : layout(std::move(l)), coords(std::move(c)) {
  validate();
}

void Pose::validate() const {
  if (coords.size() != layout.total_dim()) {
    throw std::invalid_argument("pose has " + std::to_string(coords.size()) +
                                " coordinates, layout expects " +
                                std::to_string(layout.total_dim()));
  }
  if (!coords.allFinite()) {
    throw std::invalid_argument("pose contains non-finite coordinates");
  }
}

PoseTrajectory::PoseTrajectory(JointLayout l, Eigen::MatrixXd f, double hz)
    : layout(std::move(l)), frames(std::move(f)), frame_hz(hz) {
  validate();
}

void PoseTrajectory::validate() const {
  if (frames.rows() < 1) {
    throw std::invalid_argument("trajectory must have at least one frame");
  }
  if (frames.cols() != layout.total_dim()) {
    throw std::invalid_argument("trajectory has " + std::to_string(frames.cols()) +
                                " columns, layout expects " +
                                std::to_string(layout.total_dim()));
  }
  if (!frames.allFinite()) {
    throw std::invalid_argument("trajectory contains non-finite coordinates");
  }
}

void SceneWindow::validate() const {
  human_history.validate();
  partner_history.validate();
  partner_future_action.validate();
  if (human_history.layout.agent_kind != AgentKind::Human) {
    throw std::invalid_argument("ego history must use the human layout");
  }
  if (partner_history.length() != human_history.length()) {
    throw std::invalid_argument("human and partner histories differ in length (" +
                                std::to_string(human_history.length()) + " vs " +
                                std::to_string(partner_history.length()) + ")");
  }
  if (!(partner_future_action.layout == partner_history.layout)) {
    throw std::invalid_argument("partner future action layout differs from partner history");
  }
  if (target_future) {
    target_future->validate();
    if (target_future->length() != human_history.length()) {
      throw std::invalid_argument("target future length differs from history length");
    }
    if (!(target_future->layout == human_history.layout)) {
      throw std::invalid_argument("target future layout differs from ego layout");
    }
  }
}

namespace {

void shift_all_joints(Eigen::MatrixXd& frames, const Eigen::Vector3d& delta) {
  const int joints = static_cast<int>(frames.cols()) / 3;
  for (int j = 0; j < joints; ++j) {
    frames.col(3 * j + 0).array() += delta.x();
    frames.col(3 * j + 1).array() += delta.y();
    frames.col(3 * j + 2).array() += delta.z();
  }
}

void shift_all_joints(Eigen::VectorXd& coords, const Eigen::Vector3d& delta) {
  const int joints = static_cast<int>(coords.size()) / 3;
  for (int j = 0; j < joints; ++j) coords.segment<3>(3 * j) += delta;
}

}  // namespace

std::pair<SceneWindow, SceneOffset> center_scene(const SceneWindow& window) {
  window.validate();
  const int root = window.human_history.layout.joint_index("upper_back");
  SceneOffset offset;
  offset.translation =
      window.human_history.joint_at(window.human_history.length() - 1, root);

  SceneWindow centered = window;
  const Eigen::Vector3d delta = -offset.translation;
  shift_all_joints(centered.human_history.frames, delta);
  shift_all_joints(centered.partner_history.frames, delta);
  shift_all_joints(centered.partner_future_action.coords, delta);
  if (centered.target_future) shift_all_joints(centered.target_future->frames, delta);
  return {std::move(centered), offset};
}

PoseTrajectory uncenter(const PoseTrajectory& traj, const SceneOffset& offset) {
  PoseTrajectory out = traj;
  shift_all_joints(out.frames, offset.translation);
  return out;
}

PoseTrajectory translate(const PoseTrajectory& traj, const Eigen::Vector3d& v) {
  PoseTrajectory out = traj;
  shift_all_joints(out.frames, v);
  return out;
}

Pose translate(const Pose& pose, const Eigen::Vector3d& v) {
  Pose out = pose;
  shift_all_joints(out.coords, v);
  return out;
}

SceneWindow translate(const SceneWindow& window, const Eigen::Vector3d& v) {
  SceneWindow out = window;
  shift_all_joints(out.human_history.frames, v);
  shift_all_joints(out.partner_history.frames, v);
  shift_all_joints(out.partner_future_action.coords, v);
  if (out.target_future) shift_all_joints(out.target_future->frames, v);
  return out;
}

double fde(const PoseTrajectory& pred, const PoseTrajectory& truth) {
  if (!(pred.layout == truth.layout)) {
    throw std::invalid_argument("fde: layouts differ");
  }
  if (pred.length() != truth.length()) {
    throw std::invalid_argument("fde: lengths differ (" + std::to_string(pred.length()) +
                                " vs " + std::to_string(truth.length()) + ")");
  }
  const int last = pred.length() - 1;
  const int joints = pred.layout.joint_count();
  double sum = 0.0;
  for (int j = 0; j < joints; ++j) {
    sum += (pred.joint_at(last, j) - truth.joint_at(last, j)).norm();
  }
  return sum / joints;
}

}  // namespace interact
