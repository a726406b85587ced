#include "interact/synth.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <stdexcept>

#include "interact/rng.hpp"

namespace interact {

using nlohmann::json;

void PairedPoseDataset::append(const PairedPoseDataset& other) {
  if (other.size() == 0) return;
  if (size() == 0) {
    *this = other;
    return;
  }
  Eigen::MatrixXd robot(size() + other.size(), 6);
  Eigen::MatrixXd human(size() + other.size(), 27);
  robot << robot_poses, other.robot_poses;
  human << human_poses, other.human_poses;
  robot_poses = std::move(robot);
  human_poses = std::move(human);
  source_episode_ids.insert(source_episode_ids.end(), other.source_episode_ids.begin(),
                            other.source_episode_ids.end());
}

void save_paired_set(const PairedPoseDataset& set, const std::filesystem::path& path) {
  json doc;
  doc["source_episode_ids"] = set.source_episode_ids;
  auto rows = [](const Eigen::MatrixXd& m) {
    json out = json::array();
    for (int i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      out.push_back(std::move(row));
    }
    return out;
  };
  doc["robot_poses"] = rows(set.robot_poses);
  doc["human_poses"] = rows(set.human_poses);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write paired set to " + path.string());
  out << doc.dump(1) << "\n";
}

PairedPoseDataset load_paired_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open paired set " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": not valid JSON: " + e.what());
  }
  PairedPoseDataset set;
  set.source_episode_ids = doc.at("source_episode_ids").get<std::vector<std::string>>();
  auto matrix = [&](const char* key, int cols) {
    const json& rows = doc.at(key);
    Eigen::MatrixXd m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(rows[i].size()) != cols) {
        throw std::invalid_argument(path.string() + ": " + key + "[" + std::to_string(i) +
                                    "] expected " + std::to_string(cols) + " values");
      }
      for (int j = 0; j < cols; ++j) m(i, j) = rows[i][j].get<double>();
    }
    return m;
  };
  set.robot_poses = matrix("robot_poses", 6);
  set.human_poses = matrix("human_poses", 27);
  if (set.robot_poses.rows() != set.human_poses.rows()) {
    throw std::invalid_argument(path.string() + ": robot and human pair counts differ");
  }
  return set;
}

namespace {

double min_distance_between(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const int ja = static_cast<int>(a.cols()) / 3;
  const int jb = static_cast<int>(b.cols()) / 3;
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < a.rows(); ++t) {
    for (int i = 0; i < ja; ++i) {
      const Eigen::Vector3d p = a.row(t).segment<3>(3 * i).transpose();
      for (int j = 0; j < jb; ++j) {
        const Eigen::Vector3d q = b.row(t).segment<3>(3 * j).transpose();
        best = std::min(best, (p - q).norm());
      }
    }
  }
  return best;
}

Eigen::MatrixXd rigid_yaw_translate(const Eigen::MatrixXd& frames, double yaw,
                                    const Eigen::Vector3d& t) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Eigen::MatrixXd out = frames;
  const int joints = static_cast<int>(frames.cols()) / 3;
  for (int j = 0; j < joints; ++j) {
    for (int row = 0; row < frames.rows(); ++row) {
      const double x = frames(row, 3 * j), y = frames(row, 3 * j + 1);
      out(row, 3 * j) = c * x - s * y + t.x();
      out(row, 3 * j + 1) = s * x + c * y + t.y();
      out(row, 3 * j + 2) = frames(row, 3 * j + 2) + t.z();
    }
  }
  return out;
}

}  // namespace

Episode compose_synthetic_pair(const Episode& clip_a, const Episode& clip_b,
                               const SynthConfig& cfg) {
  clip_a.validate();
  clip_b.validate();
  auto check_single_human = [](const Episode& ep, const char* which) {
    if (ep.agents.size() != 1 || ep.agents[0].layout.agent_kind != AgentKind::Human) {
      throw std::invalid_argument(std::string("compose_synthetic_pair: ") + which +
                                  " must be a single-human clip");
    }
    if (std::abs(ep.frame_hz - kCanonicalHz) > 1e-6) {
      throw std::invalid_argument(std::string("compose_synthetic_pair: ") + which +
                                  " must be at 15 Hz");
    }
  };
  check_single_human(clip_a, "clip_a");
  check_single_human(clip_b, "clip_b");
  if (cfg.min_separation <= 0.0) {
    throw std::invalid_argument("compose_synthetic_pair: min_separation must be positive");
  }

  const int n = std::min(clip_a.frame_count(), clip_b.frame_count());
  const Eigen::MatrixXd a = clip_a.agents[0].frames.topRows(n);
  const Eigen::MatrixXd b = clip_b.agents[0].frames.topRows(n);

  Rng rng(cfg.seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double yaw = rng.uniform(-cfg.yaw_range, cfg.yaw_range);
    const double radius = cfg.workspace_radius * std::sqrt(rng.uniform());
    const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const Eigen::Vector3d t(radius * std::cos(theta), radius * std::sin(theta), 0.0);
    const Eigen::MatrixXd placed = rigid_yaw_translate(b, yaw, t);
    if (min_distance_between(a, placed) >= cfg.min_separation) {
      Episode out;
      out.id = clip_a.id + "+" + clip_b.id + "_s" + std::to_string(cfg.seed);
      out.task = "synthetic_pair";
      out.frame_hz = kCanonicalHz;
      out.source = EpisodeSource::SyntheticPair;
      out.agents.push_back({"human_a", JointLayout::human(), a});
      out.agents.push_back({"human_b", JointLayout::human(), placed});
      out.validate();
      return out;
    }
  }
  throw std::runtime_error(
      "compose_synthetic_pair: no placement satisfied min_separation after 100 attempts");
}

double min_jerk_factor(double tau) {
  const double t3 = tau * tau * tau;
  return 10.0 * t3 - 15.0 * t3 * tau + 6.0 * t3 * tau * tau;
}

namespace {

// ---- conflict-reach generator internals ------------------------------------

constexpr int kReachFrames = 75;        // 5 s at 15 Hz
constexpr int kCommitMin = 20;          // earliest partner commit frame
constexpr int kCommitMax = 34;          // latest partner commit frame
constexpr int kReachDuration = 18;      // frames per min-jerk reach
constexpr double kOnsetVisible = 0.05;  // partner hand travel that reveals the choice, m

struct Sway {
  Eigen::Vector3d amp = Eigen::Vector3d::Zero();
  Eigen::Vector3d freq = Eigen::Vector3d::Zero();  // Hz
  Eigen::Vector3d phase = Eigen::Vector3d::Zero();

  static Sway draw(Rng& rng, double horizontal_amp, double vertical_amp) {
    Sway s;
    for (int a = 0; a < 3; ++a) {
      s.amp[a] = (a == 2 ? vertical_amp : horizontal_amp) * rng.uniform(0.5, 1.0);
      s.freq[a] = rng.uniform(0.15, 0.45);
      s.phase[a] = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    }
    return s;
  }

  Eigen::Vector3d at(double seconds) const {
    Eigen::Vector3d v;
    for (int a = 0; a < 3; ++a) {
      v[a] = amp[a] * std::sin(2.0 * 3.14159265358979323846 * freq[a] * seconds + phase[a]);
    }
    return v;
  }
};

// Deterministic upper-body chain: shoulders hang off the torso root, each arm
// is solved from its shoulder and hand target with a fixed elbow rule.
struct BodyShape {
  Eigen::Vector3d base;     // upper_back rest position
  Eigen::Vector3d facing;   // horizontal unit vector toward the workspace
  Eigen::Vector3d lateral;  // horizontal unit vector, left-hand side
};

Eigen::VectorXd build_human_pose(const BodyShape& body, const Eigen::Vector3d& torso,
                                 const Eigen::Vector3d& left_hand,
                                 const Eigen::Vector3d& right_hand) {
  const Eigen::Vector3d up(0.0, 0.0, 1.0);
  const Eigen::Vector3d l_shoulder = torso + 0.20 * body.lateral - 0.02 * up;
  const Eigen::Vector3d r_shoulder = torso - 0.20 * body.lateral - 0.02 * up;

  auto arm = [&](const Eigen::Vector3d& shoulder, const Eigen::Vector3d& hand) {
    const Eigen::Vector3d u = hand - shoulder;
    const double len = u.norm();
    const double droop = 0.12 * std::max(0.0, 1.0 - len / 0.75);
    const Eigen::Vector3d elbow = shoulder + 0.45 * u - droop * up;
    const Eigen::Vector3d wrist = hand - 0.09 * (u / len);
    return std::array<Eigen::Vector3d, 3>{elbow, wrist, hand};
  };
  const auto left = arm(l_shoulder, left_hand);
  const auto right = arm(r_shoulder, right_hand);

  Eigen::VectorXd coords(27);
  coords.segment<3>(0) = torso;
  coords.segment<3>(3) = l_shoulder;
  coords.segment<3>(6) = r_shoulder;
  coords.segment<3>(9) = left[0];
  coords.segment<3>(12) = right[0];
  coords.segment<3>(15) = left[1];
  coords.segment<3>(18) = right[1];
  coords.segment<3>(21) = left[2];
  coords.segment<3>(24) = right[2];
  return coords;
}

struct ReachPlan {
  BodyShape body;
  Sway torso_sway;
  Sway left_sway;
  Sway right_sway;
  Eigen::Vector3d rest_left;
  Eigen::Vector3d rest_right;
  int onset = 0;                       // first frame of the right-hand reach
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
};

// Right-hand target at frame t: rest-plus-sway until onset, then a min-jerk
// reach launched from the exact pre-onset hand position, then hold.
Eigen::Vector3d right_hand_at(const ReachPlan& plan, int t) {
  const double seconds = t / kCanonicalHz;
  const Eigen::Vector3d swayed = plan.rest_right + plan.right_sway.at(seconds);
  if (t < plan.onset) return swayed;
  const Eigen::Vector3d start =
      plan.rest_right + plan.right_sway.at(plan.onset / kCanonicalHz);
  const double tau = std::min(1.0, static_cast<double>(t - plan.onset) / kReachDuration);
  return start + min_jerk_factor(tau) * (plan.target - start);
}

Eigen::MatrixXd render_agent(const ReachPlan& plan, int n_frames) {
  Eigen::MatrixXd frames(n_frames, 27);
  for (int t = 0; t < n_frames; ++t) {
    const double seconds = t / kCanonicalHz;
    const Eigen::Vector3d torso = plan.body.base + plan.torso_sway.at(seconds);
    const Eigen::Vector3d left = plan.rest_left + plan.left_sway.at(seconds);
    frames.row(t) = build_human_pose(plan.body, torso, left, right_hand_at(plan, t)).transpose();
  }
  return frames;
}

BodyShape stand_at(const Eigen::Vector3d& base, const Eigen::Vector3d& facing) {
  BodyShape body;
  body.base = base;
  body.facing = facing.normalized();
  body.lateral = Eigen::Vector3d(0.0, 0.0, 1.0).cross(body.facing);
  return body;
}

ReachPlan plan_agent(Rng& rng, const Eigen::Vector3d& nominal_base,
                     const Eigen::Vector3d& facing, double jitter) {
  ReachPlan plan;
  const Eigen::Vector3d base =
      nominal_base + Eigen::Vector3d(rng.uniform(-jitter, jitter),
                                     rng.uniform(-jitter, jitter), 0.0);
  plan.body = stand_at(base, facing);
  plan.torso_sway = Sway::draw(rng, 0.015, 0.006);
  plan.left_sway = Sway::draw(rng, 0.010, 0.005);
  plan.right_sway = Sway::draw(rng, 0.010, 0.005);
  const Eigen::Vector3d down(0.0, 0.0, -0.45);
  const Eigen::Vector3d l_shoulder = base + 0.20 * plan.body.lateral;
  const Eigen::Vector3d r_shoulder = base - 0.20 * plan.body.lateral;
  plan.rest_left = l_shoulder + 0.15 * plan.body.facing + down;
  plan.rest_right = r_shoulder + 0.15 * plan.body.facing + down;
  plan.onset = kReachFrames;  // no reach until a target is assigned
  return plan;
}

// First frame at which the reaching hand has moved kOnsetVisible from its
// launch point; conservative fallback is one quarter of the reach.
int frames_until_visible(const Eigen::Vector3d& start, const Eigen::Vector3d& target) {
  const double dist = (target - start).norm();
  if (dist <= kOnsetVisible) return kReachDuration / 4;
  for (int dt = 1; dt <= kReachDuration; ++dt) {
    if (min_jerk_factor(static_cast<double>(dt) / kReachDuration) * dist >= kOnsetVisible) {
      return dt;
    }
  }
  return kReachDuration;
}

}  // namespace

Episode conflict_reach_episode(const SynthConfig& cfg, int index, AgentKind partner_kind,
                               std::optional<int> forced_choice) {
  if (cfg.objects.size() != 2) {
    throw std::invalid_argument("conflict_reach_episode: cfg.objects must hold exactly 2 targets");
  }

  // Independent streams: everything observable before the commit is drawn from
  // the scene stream; the object choice comes from its own stream so forcing
  // it replays an identical pre-commit scene.
  Rng scene_rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (2 * index + 1)));
  Rng choice_rng(cfg.seed ^ (0xc2b2ae3d27d4eb4fULL * (2 * index + 2)));

  ReachPlan human = plan_agent(scene_rng, Eigen::Vector3d(1.05, 0.0, 1.38),
                               Eigen::Vector3d(-1.0, 0.0, 0.0), 0.04);
  ReachPlan partner = plan_agent(scene_rng, Eigen::Vector3d(-0.15, 0.0, 1.38),
                                 Eigen::Vector3d(1.0, 0.0, 0.0), 0.04);
  const int commit = scene_rng.uniform_int(kCommitMin, kCommitMax);

  const int choice = forced_choice ? *forced_choice : (choice_rng.coin() ? 1 : 0);
  if (choice != 0 && choice != 1) {
    throw std::invalid_argument("conflict_reach_episode: choice must be 0 or 1");
  }

  partner.onset = commit;
  partner.target = cfg.objects[choice];
  const Eigen::Vector3d partner_launch =
      partner.rest_right + partner.right_sway.at(commit / kCanonicalHz);
  const int human_onset = commit + frames_until_visible(partner_launch, partner.target);
  human.onset = human_onset;
  human.target = cfg.objects[1 - choice];

  Episode ep;
  ep.id = "conflict_reach_" + std::string(partner_kind == AgentKind::Robot ? "hr_" : "hh_") +
          std::to_string(cfg.seed) + "_" + std::to_string(index);
  ep.task = "conflict_reach";
  ep.frame_hz = kCanonicalHz;
  ep.source = EpisodeSource::Procedural;

  ep.agents.push_back({"human", JointLayout::human(), render_agent(human, kReachFrames)});
  const Eigen::MatrixXd partner_frames = render_agent(partner, kReachFrames);
  if (partner_kind == AgentKind::Robot) {
    const PoseTrajectory teleop(JointLayout::human(), partner_frames, kCanonicalHz);
    const PoseTrajectory markers = retarget_trajectory(teleop, ArmSide::Right, MarkerLayout{});
    ep.agents.push_back({"robot", JointLayout::robot(), markers.frames});
  } else {
    ep.agents.push_back({"partner", JointLayout::human(), partner_frames});
  }

  ep.events["commit_frame"] = commit;
  ep.events["onset_frame"] = human_onset;
  ep.events["partner_choice"] = choice;
  ep.events["human_target"] = 1 - choice;
  ep.validate();
  return ep;
}

std::vector<Episode> gen_conflict_reach(const SynthConfig& cfg, int n_episodes,
                                        AgentKind partner_kind) {
  std::vector<Episode> episodes;
  episodes.reserve(n_episodes);
  for (int i = 0; i < n_episodes; ++i) {
    episodes.push_back(conflict_reach_episode(cfg, i, partner_kind));
  }
  return episodes;
}

Episode make_teleop_episode(const Episode& ep, int agent_index, ArmSide side,
                            const MarkerLayout& markers) {
  ep.validate();
  if (agent_index < 0 || agent_index >= static_cast<int>(ep.agents.size())) {
    throw std::invalid_argument("make_teleop_episode: agent index out of range");
  }
  const AgentTrack& driver = ep.agents[agent_index];
  if (driver.layout.agent_kind != AgentKind::Human) {
    throw std::invalid_argument("make_teleop_episode: agent '" + driver.name +
                                "' is not a human");
  }
  const PoseTrajectory human(driver.layout, driver.frames, ep.frame_hz);
  const PoseTrajectory robot = retarget_trajectory(human, side, markers);

  Episode out;
  out.id = ep.id + "_teleop";
  out.task = ep.task;
  out.frame_hz = ep.frame_hz;
  out.source = ep.source;
  out.agents.push_back({"teleoperator", driver.layout, driver.frames});
  out.agents.push_back({"robot", JointLayout::robot(), robot.frames});
  out.events = ep.events;
  out.validate();
  return out;
}

PairedPoseDataset build_paired_set(const Episode& teleop_ep) {
  PairedPoseDataset set;
  if (teleop_ep.agents.empty() || teleop_ep.frame_count() == 0) {
    set.robot_poses.resize(0, 6);
    set.human_poses.resize(0, 27);
    return set;
  }
  const AgentTrack* human = nullptr;
  const AgentTrack* robot = nullptr;
  for (const auto& a : teleop_ep.agents) {
    if (a.layout.agent_kind == AgentKind::Human) human = &a;
    if (a.layout.agent_kind == AgentKind::Robot) robot = &a;
  }
  if (human == nullptr || robot == nullptr) {
    throw std::invalid_argument("build_paired_set: episode '" + teleop_ep.id +
                                "' needs one human and one robot agent");
  }
  if (human->frames.rows() != robot->frames.rows()) {
    throw std::invalid_argument("build_paired_set: frame counts differ (" +
                                std::to_string(human->frames.rows()) + " vs " +
                                std::to_string(robot->frames.rows()) + ")");
  }
  set.robot_poses = robot->frames;
  set.human_poses = human->frames;
  set.source_episode_ids.push_back(teleop_ep.id);
  return set;
}

}  // namespace interact
