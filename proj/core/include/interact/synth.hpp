#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <vector>

#include "interact/episode.hpp"
#include "interact/retarget.hpp"

namespace interact {

/// Knobs for synthetic scene composition and procedural generation.
struct SynthConfig {
  double min_separation = 0.2;    // meters, inter-agent joint clearance
  double workspace_radius = 1.0;  // meters, translation draw radius
  double yaw_range = 3.14159265358979323846;  // radians, +/- about vertical
  std::uint64_t seed = 0;
  std::vector<Eigen::Vector3d> objects;  // reach targets for procedural tasks
};

/// Simultaneous (robot pose, teleoperating-human pose) samples used to align
/// the robot and human embedding layers.
struct PairedPoseDataset {
  Eigen::MatrixXd robot_poses;  // P x 6
  Eigen::MatrixXd human_poses;  // P x 27
  std::vector<std::string> source_episode_ids;

  int size() const { return static_cast<int>(robot_poses.rows()); }
  void append(const PairedPoseDataset& other);
};

void save_paired_set(const PairedPoseDataset& set, const std::filesystem::path& path);
PairedPoseDataset load_paired_set(const std::filesystem::path& path);

/// Places clip_b rigidly (seeded yaw about vertical, seeded translation inside
/// workspace_radius) next to clip_a and crops both to the shorter length. The
/// placement is resampled up to 100 times until every inter-agent joint pair
/// in every frame is at least min_separation apart; failure to place throws.
/// Deterministic under cfg.seed.
Episode compose_synthetic_pair(const Episode& clip_a, const Episode& clip_b,
                               const SynthConfig& cfg);

/// Procedural two-agent conflict-reach task. cfg.objects must name exactly two
/// targets. Per episode the partner commits (seeded, uniform) to one object
/// and reaches for it with a minimum-jerk hand profile; the ego human reaches
/// for the other object, starting only once the partner's hand has visibly
/// moved. All pre-commit motion is drawn before the choice, so histories
/// before the commit carry no information about it.
///
/// partner_kind selects a second human or a robot partner; robot partners are
/// synthesized by retargeting a virtual teleoperator arm, frame by frame.
std::vector<Episode> gen_conflict_reach(const SynthConfig& cfg, int n_episodes,
                                        AgentKind partner_kind = AgentKind::Human);

/// Single-episode entry point. `index` selects the per-episode random streams
/// under cfg.seed; forcing the choice replays the same scene with the other
/// object, which is how the pre-commit-ambiguity property is audited.
Episode conflict_reach_episode(const SynthConfig& cfg, int index, AgentKind partner_kind,
                               std::optional<int> forced_choice = std::nullopt);

/// Minimum-jerk interpolation factor: s(0)=0, s(1)=1, zero velocity and
/// acceleration at both ends.
double min_jerk_factor(double tau);

/// Derives a teleoperation episode from one human agent of `ep`: the output
/// pairs that agent (the teleoperator) with the robot trajectory produced by
/// retargeting its arm.
Episode make_teleop_episode(const Episode& ep, int agent_index = 0,
                            ArmSide side = ArmSide::Right,
                            const MarkerLayout& markers = MarkerLayout{});

/// One pose pair per frame of a teleop episode (one human + one robot agent,
/// equal frame counts).
PairedPoseDataset build_paired_set(const Episode& teleop_ep);

}  // namespace interact
