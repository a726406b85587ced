#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace interact {

enum class AgentKind { Human, Robot };

std::string to_string(AgentKind kind);
AgentKind agent_kind_from_string(const std::string& s);

/// Named joint layout of one agent. Coordinates are flattened row vectors of
/// 3-D joint positions in meters, so total_dim = 3 * |joint_names|.
///
/// Two layouts exist: a 9-joint human upper body (27-D) and a 2-marker robot
/// end-effector (6-D).
struct JointLayout {
  AgentKind agent_kind = AgentKind::Human;
  std::vector<std::string> joint_names;
  int dims_per_joint = 3;

  static const JointLayout& human();
  static const JointLayout& robot();

  int joint_count() const { return static_cast<int>(joint_names.size()); }
  int total_dim() const { return dims_per_joint * joint_count(); }

  /// Index of a named joint; throws std::invalid_argument if absent.
  int joint_index(const std::string& name) const;

  bool operator==(const JointLayout& other) const {
    return agent_kind == other.agent_kind && joint_names == other.joint_names &&
           dims_per_joint == other.dims_per_joint;
  }
};

/// One agent's pose at a single instant: a total_dim coordinate vector.
struct Pose {
  JointLayout layout;
  Eigen::VectorXd coords;

  Pose() = default;
  Pose(JointLayout l, Eigen::VectorXd c);

  Eigen::Vector3d joint(int j) const { return coords.segment<3>(3 * j); }
  void set_joint(int j, const Eigen::Vector3d& p) { coords.segment<3>(3 * j) = p; }

  void validate() const;  // finite, length matches layout
};

/// A time window of poses: frames is T x total_dim, row t = pose at step t.
struct PoseTrajectory {
  JointLayout layout;
  Eigen::MatrixXd frames;
  double frame_hz = 15.0;

  PoseTrajectory() = default;
  PoseTrajectory(JointLayout l, Eigen::MatrixXd f, double hz = 15.0);

  int length() const { return static_cast<int>(frames.rows()); }
  Pose pose_at(int t) const { return Pose(layout, frames.row(t).transpose()); }
  Eigen::Vector3d joint_at(int t, int j) const { return frames.row(t).segment<3>(3 * j).transpose(); }

  void validate() const;  // T >= 1, finite, column count matches layout
};

/// Rigid scene translation produced by centering; add back to restore world
/// coordinates.
struct SceneOffset {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// The observed context of one interaction: the ego human's history, the
/// partner's history (human or robot), the partner's future action pose, and
/// (for training/eval) the ego human's future trajectory.
struct SceneWindow {
  PoseTrajectory human_history;            // T x 27
  PoseTrajectory partner_history;          // T x 27 or T x 6
  Pose partner_future_action;              // 27-D or 6-D
  std::optional<PoseTrajectory> target_future;  // T x 27

  int horizon() const { return human_history.length(); }
  void validate() const;
};

/// Centers the scene on the ego human's torso at the last observed frame.
/// The offset is the upper_back position in that frame; it is subtracted from
/// every 3-D point of every agent, including the future action and target.
std::pair<SceneWindow, SceneOffset> center_scene(const SceneWindow& window);

/// Adds the offset back to every 3-D point of every frame.
PoseTrajectory uncenter(const PoseTrajectory& traj, const SceneOffset& offset);

/// Translates all joints of all frames by v.
PoseTrajectory translate(const PoseTrajectory& traj, const Eigen::Vector3d& v);
Pose translate(const Pose& pose, const Eigen::Vector3d& v);
SceneWindow translate(const SceneWindow& window, const Eigen::Vector3d& v);

/// Final displacement error in meters: mean over joints of the Euclidean
/// distance between predicted and true joint positions at the last frame.
/// Throws on layout or length mismatch.
double fde(const PoseTrajectory& pred, const PoseTrajectory& truth);

}  // namespace interact
