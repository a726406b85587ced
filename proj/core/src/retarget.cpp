#include "interact/retarget.hpp"

#include <stdexcept>
#include <string>

namespace interact {

namespace {

// Minimal rotation taking +x onto the unit vector u (no roll component).
Eigen::Quaterniond rotation_from_rest(const Eigen::Vector3d& u) {
  const Eigen::Vector3d rest(1.0, 0.0, 0.0);
  Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(rest, u);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

EEPose hand_frame(const Pose& human_pose, ArmSide side) {
  if (human_pose.layout.agent_kind != AgentKind::Human) {
    throw std::invalid_argument("hand_frame: pose must use the human layout");
  }
  const std::string prefix = side == ArmSide::Left ? "l_" : "r_";
  const Eigen::Vector3d wrist = human_pose.joint(human_pose.layout.joint_index(prefix + "wrist"));
  const Eigen::Vector3d hand = human_pose.joint(human_pose.layout.joint_index(prefix + "hand"));

  const Eigen::Vector3d bone = hand - wrist;
  const double len = bone.norm();
  if (len < 1e-3) {
    throw std::invalid_argument("hand_frame: degenerate wrist-to-hand segment (" +
                                std::to_string(len) + " m)");
  }

  EEPose ee;
  ee.position = hand;
  ee.orientation = rotation_from_rest(bone / len);
  return ee;
}

Pose ee_to_marker_pose(const EEPose& ee, const MarkerLayout& layout) {
  const Eigen::Matrix3d r = ee.orientation.toRotationMatrix();
  Eigen::VectorXd coords(6);
  coords.segment<3>(0) = r * layout.hand_offset + ee.position;
  coords.segment<3>(3) = r * layout.wrist_offset + ee.position;
  return Pose(JointLayout::robot(), coords);
}

PoseTrajectory retarget_trajectory(const PoseTrajectory& human, ArmSide side,
                                   const MarkerLayout& layout) {
  human.validate();
  Eigen::MatrixXd frames(human.length(), 6);
  for (int t = 0; t < human.length(); ++t) {
    try {
      const Pose robot = ee_to_marker_pose(hand_frame(human.pose_at(t), side), layout);
      frames.row(t) = robot.coords.transpose();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("retarget_trajectory: frame " + std::to_string(t) +
                                  ": " + e.what());
    }
  }
  return PoseTrajectory(JointLayout::robot(), std::move(frames), human.frame_hz);
}

}  // namespace interact
