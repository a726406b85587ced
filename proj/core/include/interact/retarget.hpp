#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "interact/pose.hpp"

namespace interact {

enum class ArmSide { Left, Right };

/// 6-DoF end-effector pose. Quaternion is unit norm with w >= 0 so that
/// nearby arm poses map to nearby quaternion coordinates.
struct EEPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

/// The two tracked end-effector points, expressed in the end-effector frame.
struct MarkerLayout {
  Eigen::Vector3d hand_offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d wrist_offset = Eigen::Vector3d(-0.10, 0.0, 0.0);
};

/// Maps a human arm pose to an end-effector pose: position is the hand joint,
/// orientation is the minimal rotation taking the rest bone direction (+x) to
/// the current wrist-to-hand direction. Roll about the bone axis is
/// unobservable from two points and left at zero.
///
/// Throws if the wrist-to-hand segment is shorter than 1 mm.
EEPose hand_frame(const Pose& human_pose, ArmSide side);

/// Rigidly places the two marker points: for each offset o, the world point is
/// R(q) * o + p. Output is the 6-D robot pose [hand_point, wrist_point].
Pose ee_to_marker_pose(const EEPose& ee, const MarkerLayout& layout);

/// Frame-wise hand_frame + ee_to_marker_pose over a whole trajectory.
/// Reports the first degenerate frame index on failure.
PoseTrajectory retarget_trajectory(const PoseTrajectory& human, ArmSide side,
                                   const MarkerLayout& layout);

}  // namespace interact
