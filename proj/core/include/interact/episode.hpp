#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "interact/pose.hpp"

namespace interact {

enum class EpisodeSource { Recorded, SyntheticPair, Procedural };

std::string to_string(EpisodeSource source);
EpisodeSource episode_source_from_string(const std::string& s);

struct AgentTrack {
  std::string name;
  JointLayout layout;
  Eigen::MatrixXd frames;  // N x layout.total_dim()
};

/// One recorded or synthesized interaction: one or two agents sampled on a
/// shared clock. The unit of dataset storage and train/val/test assignment.
struct Episode {
  std::string id;
  std::string task;
  double frame_hz = 15.0;
  EpisodeSource source = EpisodeSource::Recorded;
  std::vector<AgentTrack> agents;
  /// Optional per-episode event markers (e.g. "commit_frame" for procedural
  /// data); consumed by evaluation traces.
  std::map<std::string, double> events;

  int frame_count() const { return agents.empty() ? 0 : static_cast<int>(agents[0].frames.rows()); }
  void validate() const;

  const AgentTrack& agent(const std::string& name) const;
  /// Index of the first human-layout agent; throws if none.
  int ego_human_index() const;
};

/// Parses and validates an episode file. Rejects non-finite coordinates,
/// mismatched frame counts, and unknown layouts, naming the offending field
/// (and frame index where applicable).
Episode load_episode(const std::filesystem::path& path);

/// Canonical JSON serialization; save followed by load is the identity, and
/// re-saving a loaded canonical file is byte-identical.
void save_episode(const Episode& ep, const std::filesystem::path& path);

std::string episode_to_json(const Episode& ep);
Episode episode_from_json(const std::string& text, const std::string& origin = "<string>");

/// Linear per-channel resampling onto a uniform grid at target_hz spanning the
/// same duration; first and last frames are preserved exactly.
Episode resample(const Episode& ep, double target_hz);

/// One 30-frame training example: scene holds the 15-frame histories, the
/// partner action at the final future frame, and the 15-frame target.
struct TrainingWindow {
  SceneWindow scene;
  std::string episode_id;
  std::string task;
  int start_frame = 0;
};

inline constexpr int kWindowHistory = 15;
inline constexpr int kWindowFuture = 15;
inline constexpr int kWindowSpan = kWindowHistory + kWindowFuture;
inline constexpr double kCanonicalHz = 15.0;

/// Slides a 30-frame window (15 history + 15 future) over a two-agent episode
/// at 15 Hz. Episodes shorter than 30 frames produce an empty list.
/// Single-agent episodes are rejected; pair them via compose_synthetic_pair
/// first.
std::vector<TrainingWindow> make_windows(const Episode& ep, int stride);

/// Episode-granularity split ratios and seed.
struct SplitSpec {
  int train = 8;
  int val = 1;
  int test = 1;
  std::uint64_t seed = 0;
};

struct EpisodeSplits {
  std::vector<Episode> train;
  std::vector<Episode> val;
  std::vector<Episode> test;
};

/// Seeded shuffle then contiguous assignment; integer remainders go to train.
/// Assignment is at episode granularity, so windows never leak across splits.
EpisodeSplits split_episodes(const std::vector<Episode>& episodes, const SplitSpec& spec);

/// Dataset directory helpers: one episode file per id plus manifest.json
/// listing ids and their split assignment.
void save_dataset(const std::vector<Episode>& episodes, const SplitSpec& spec,
                  const std::filesystem::path& dir);
EpisodeSplits load_dataset(const std::filesystem::path& dir);

/// Single-window JSON payload used by the predict interface. The future
/// action may be absent on input (second return value false); marginal
/// variants do not need it.
std::string scene_window_to_json(const SceneWindow& window);
std::pair<SceneWindow, bool> scene_window_from_json(const std::string& text,
                                                    const std::string& origin = "<string>");

}  // namespace interact
