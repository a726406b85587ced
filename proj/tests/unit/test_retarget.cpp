#include <doctest.h>

#include <cmath>

#include "interact/retarget.hpp"
#include "interact/rng.hpp"

using namespace interact;

namespace {

// Rodrigues rotation-matrix oracle for axis-angle, independent of Eigen's
// quaternion construction.
Eigen::Matrix3d axis_angle_matrix(const Eigen::Vector3d& axis, double angle) {
  const Eigen::Vector3d u = axis.normalized();
  Eigen::Matrix3d k;
  k << 0, -u.z(), u.y(), u.z(), 0, -u.x(), -u.y(), u.x(), 0;
  return Eigen::Matrix3d::Identity() + std::sin(angle) * k +
         (1.0 - std::cos(angle)) * k * k;
}

Pose human_pose_with_arm(const Eigen::Vector3d& wrist, const Eigen::Vector3d& hand,
                         ArmSide side = ArmSide::Right) {
  Eigen::VectorXd coords = Eigen::VectorXd::Zero(27);
  const JointLayout& layout = JointLayout::human();
  const std::string prefix = side == ArmSide::Left ? "l_" : "r_";
  coords.segment<3>(3 * layout.joint_index(prefix + "wrist")) = wrist;
  coords.segment<3>(3 * layout.joint_index(prefix + "hand")) = hand;
  // keep the unused arm non-degenerate
  const std::string other = side == ArmSide::Left ? "r_" : "l_";
  coords.segment<3>(3 * layout.joint_index(other + "hand")) = Eigen::Vector3d(0, 2, 0);
  return Pose(layout, coords);
}

}  // namespace

TEST_CASE("hand_frame maps positions and bone directions") {
  SUBCASE("a bone along +x is the identity orientation") {
    const EEPose ee = hand_frame(human_pose_with_arm({0, 0, 0}, {0.1, 0, 0}), ArmSide::Right);
    CHECK(ee.position == Eigen::Vector3d(0.1, 0.0, 0.0));
    CHECK(ee.orientation.w() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ee.orientation.vec().norm() == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("a bone along +y is a 90-degree yaw, against the rotation oracle") {
    const EEPose ee = hand_frame(human_pose_with_arm({0, 0, 0}, {0, 0.1, 0}), ArmSide::Right);
    const double s = std::sqrt(0.5);
    CHECK(ee.orientation.w() == doctest::Approx(s).epsilon(1e-9));
    CHECK(ee.orientation.x() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ee.orientation.y() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ee.orientation.z() == doctest::Approx(s).epsilon(1e-9));

    const Eigen::Matrix3d oracle = axis_angle_matrix({0, 0, 1}, M_PI / 2.0);
    CHECK((ee.orientation.toRotationMatrix() - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("degenerate bones are rejected") {
    CHECK_THROWS_AS((void)hand_frame(human_pose_with_arm({0.2, 0.1, 0}, {0.2, 0.1, 0}),
                                     ArmSide::Right),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        (void)hand_frame(human_pose_with_arm({0, 0, 0}, {0.0005, 0, 0}), ArmSide::Right),
        std::invalid_argument);
  }

  SUBCASE("the left arm selects the left joints") {
    const EEPose ee =
        hand_frame(human_pose_with_arm({1, 1, 1}, {1.1, 1, 1}, ArmSide::Left), ArmSide::Left);
    CHECK(ee.position == Eigen::Vector3d(1.1, 1.0, 1.0));
  }

  SUBCASE("quaternions are unit norm with nonnegative w over random arms") {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
      Eigen::Vector3d wrist(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      Eigen::Vector3d dir(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      if (dir.norm() < 0.05) dir = Eigen::Vector3d(1, 0, 0);
      const EEPose ee =
          hand_frame(human_pose_with_arm(wrist, wrist + 0.12 * dir.normalized()),
                     ArmSide::Right);
      CHECK(std::abs(ee.orientation.norm() - 1.0) < 1e-9);
      CHECK(ee.orientation.w() >= 0.0);
    }
  }
}

TEST_CASE("ee_to_marker_pose places the marker pair rigidly") {
  MarkerLayout markers;  // hand at the origin of the frame, wrist 10 cm behind

  SUBCASE("identity pose at the origin") {
    const Pose robot = ee_to_marker_pose(EEPose{}, markers);
    CHECK(robot.joint(0) == Eigen::Vector3d(0, 0, 0));
    CHECK(robot.joint(1) == Eigen::Vector3d(-0.1, 0, 0));
  }

  SUBCASE("pure translation shifts both points") {
    EEPose ee;
    ee.position = Eigen::Vector3d(1, 2, 3);
    const Pose robot = ee_to_marker_pose(ee, markers);
    CHECK(robot.joint(0) == Eigen::Vector3d(1, 2, 3));
    CHECK(robot.joint(1) == Eigen::Vector3d(0.9, 2, 3));
  }

  SUBCASE("a 90-degree yaw moves the wrist marker to -y, against the oracle") {
    EEPose ee;
    ee.position = Eigen::Vector3d(0.5, 0.25, 1.0);
    const Eigen::Matrix3d oracle = axis_angle_matrix({0, 0, 1}, M_PI / 2.0);
    ee.orientation = Eigen::Quaterniond(oracle);
    const Pose robot = ee_to_marker_pose(ee, markers);
    const Eigen::Vector3d expected_wrist =
        oracle * Eigen::Vector3d(-0.1, 0, 0) + ee.position;
    CHECK((robot.joint(1) - expected_wrist).norm() < 1e-12);
    CHECK((robot.joint(1) - (Eigen::Vector3d(0, -0.1, 0) + ee.position)).norm() < 1e-9);
  }
}

TEST_CASE("retarget_trajectory is rigid, equivariant, and continuous") {
  Rng rng(17);
  const int t_len = 40;
  Eigen::MatrixXd frames(t_len, 27);
  // a smooth synthetic reach with a 9 cm wrist-hand bone throughout
  for (int t = 0; t < t_len; ++t) {
    Eigen::VectorXd coords = Eigen::VectorXd::Zero(27);
    const double phase = t / 12.0;
    const Eigen::Vector3d hand(0.4 + 0.2 * std::sin(phase), 0.3 * std::cos(phase),
                               1.0 + 0.05 * std::sin(2.0 * phase));
    const Eigen::Vector3d dir =
        Eigen::Vector3d(std::cos(phase), std::sin(phase), 0.3).normalized();
    coords.segment<3>(3 * JointLayout::human().joint_index("r_hand")) = hand;
    coords.segment<3>(3 * JointLayout::human().joint_index("r_wrist")) = hand - 0.09 * dir;
    coords.segment<3>(3 * JointLayout::human().joint_index("l_hand")) =
        Eigen::Vector3d(0, 2, 0);
    frames.row(t) = coords.transpose();
  }
  const PoseTrajectory human(JointLayout::human(), frames);
  const MarkerLayout markers;
  const PoseTrajectory robot = retarget_trajectory(human, ArmSide::Right, markers);

  SUBCASE("constant input gives constant output") {
    Eigen::MatrixXd constant = frames.row(0).replicate(5, 1);
    const PoseTrajectory out =
        retarget_trajectory(PoseTrajectory(JointLayout::human(), constant), ArmSide::Right,
                            markers);
    for (int t = 1; t < 5; ++t) CHECK(out.frames.row(t) == out.frames.row(0));
  }

  SUBCASE("marker separation is invariant and equals the layout distance") {
    const double expected = (markers.hand_offset - markers.wrist_offset).norm();
    for (int t = 0; t < robot.length(); ++t) {
      const double d = (robot.joint_at(t, 0) - robot.joint_at(t, 1)).norm();
      CHECK(std::abs(d - expected) < 1e-9);
    }
  }

  SUBCASE("translation equivariance") {
    const Eigen::Vector3d v(0.75, -1.25, 0.5);
    const PoseTrajectory shifted = retarget_trajectory(translate(human, v), ArmSide::Right,
                                                       markers);
    CHECK((shifted.frames - translate(robot, v).frames).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("continuity: marker steps stay within 5x the input step") {
    double max_in = 0.0, max_out = 0.0;
    for (int t = 1; t < t_len; ++t) {
      max_in = std::max(max_in, (frames.row(t) - frames.row(t - 1)).norm());
      max_out = std::max(max_out, (robot.frames.row(t) - robot.frames.row(t - 1)).norm());
    }
    CHECK(max_out <= 5.0 * max_in);
  }

  SUBCASE("degenerate frames report their index") {
    Eigen::MatrixXd broken = frames;
    broken.row(7).segment<3>(3 * JointLayout::human().joint_index("r_wrist")) =
        broken.row(7).segment<3>(3 * JointLayout::human().joint_index("r_hand"));
    try {
      (void)retarget_trajectory(PoseTrajectory(JointLayout::human(), broken), ArmSide::Right,
                                markers);
      FAIL("expected a degenerate-frame error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("frame 7") != std::string::npos);
    }
  }
}
