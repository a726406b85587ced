#include "interact/episode.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "interact/rng.hpp"

namespace interact {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(EpisodeSource source) {
  switch (source) {
    case EpisodeSource::Recorded: return "recorded";
    case EpisodeSource::SyntheticPair: return "synthetic_pair";
    case EpisodeSource::Procedural: return "procedural";
  }
  return "recorded";
}

EpisodeSource episode_source_from_string(const std::string& s) {
  if (s == "recorded") return EpisodeSource::Recorded;
  if (s == "synthetic_pair") return EpisodeSource::SyntheticPair;
  if (s == "procedural") return EpisodeSource::Procedural;
  throw std::invalid_argument("unknown episode source '" + s + "'");
}

void Episode::validate() const {
  if (agents.empty() || agents.size() > 2) {
    throw std::invalid_argument("episode '" + id + "' must have one or two agents, has " +
                                std::to_string(agents.size()));
  }
  int robots = 0;
  for (const auto& a : agents) {
    if (a.layout.agent_kind == AgentKind::Robot) ++robots;
  }
  if (robots > 1) {
    throw std::invalid_argument("episode '" + id + "' has more than one robot agent");
  }
  const auto n = agents[0].frames.rows();
  if (n < 2) {
    throw std::invalid_argument("episode '" + id + "' must have at least 2 frames, has " +
                                std::to_string(n));
  }
  for (const auto& a : agents) {
    if (a.frames.rows() != n) {
      throw std::invalid_argument("episode '" + id + "': agent '" + a.name + "' has " +
                                  std::to_string(a.frames.rows()) +
                                  " frames, agent '" + agents[0].name + "' has " +
                                  std::to_string(n));
    }
    if (a.frames.cols() != a.layout.total_dim()) {
      throw std::invalid_argument("episode '" + id + "': agent '" + a.name + "' has " +
                                  std::to_string(a.frames.cols()) +
                                  " coordinate columns, layout expects " +
                                  std::to_string(a.layout.total_dim()));
    }
    if (!a.frames.allFinite()) {
      for (int t = 0; t < a.frames.rows(); ++t) {
        if (!a.frames.row(t).allFinite()) {
          throw std::invalid_argument("episode '" + id + "': agent '" + a.name +
                                      "' has a non-finite coordinate in frames[" +
                                      std::to_string(t) + "]");
        }
      }
    }
  }
  if (frame_hz <= 0.0) {
    throw std::invalid_argument("episode '" + id + "' has non-positive frame_hz");
  }
}

const AgentTrack& Episode::agent(const std::string& name) const {
  for (const auto& a : agents) {
    if (a.name == name) return a;
  }
  throw std::invalid_argument("episode '" + id + "' has no agent named '" + name + "'");
}

int Episode::ego_human_index() const {
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].layout.agent_kind == AgentKind::Human) return static_cast<int>(i);
  }
  throw std::invalid_argument("episode '" + id + "' has no human agent");
}

namespace {

JointLayout layout_from_json(const json& agent, const std::string& where) {
  const std::string kind = agent.at("kind").get<std::string>();
  std::vector<std::string> names = agent.at("joint_names").get<std::vector<std::string>>();
  const JointLayout& expected =
      kind == "human" ? JointLayout::human()
      : kind == "robot" ? JointLayout::robot()
      : throw std::invalid_argument(where + ".kind: unknown agent kind '" + kind + "'");
  if (names != expected.joint_names) {
    throw std::invalid_argument(where + ".joint_names: unknown " + kind +
                                " layout (expected the canonical " +
                                std::to_string(expected.joint_count()) + "-joint ordering)");
  }
  return expected;
}

Eigen::MatrixXd frames_from_json(const json& rows, int expected_cols, const std::string& where) {
  if (!rows.is_array() || rows.empty()) {
    throw std::invalid_argument(where + ": frames must be a non-empty array");
  }
  Eigen::MatrixXd frames(rows.size(), expected_cols);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const json& row = rows[t];
    if (!row.is_array() || static_cast<int>(row.size()) != expected_cols) {
      throw std::invalid_argument(where + "[" + std::to_string(t) + "]: expected " +
                                  std::to_string(expected_cols) + " coordinates, got " +
                                  std::to_string(row.size()));
    }
    for (int c = 0; c < expected_cols; ++c) {
      if (!row[c].is_number()) {
        throw std::invalid_argument(where + "[" + std::to_string(t) + "][" +
                                    std::to_string(c) + "]: not a number");
      }
      const double v = row[c].get<double>();
      if (!std::isfinite(v)) {
        throw std::invalid_argument(where + "[" + std::to_string(t) + "][" +
                                    std::to_string(c) + "]: non-finite coordinate");
      }
      frames(t, c) = v;
    }
  }
  return frames;
}

}  // namespace

Episode episode_from_json(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {  // parse errors and numeric overflows
    throw std::invalid_argument(origin + ": not valid JSON: " + e.what());
  }
  try {
    Episode ep;
    ep.id = doc.at("id").get<std::string>();
    ep.task = doc.at("task").get<std::string>();
    ep.frame_hz = doc.at("frame_hz").get<double>();
    ep.source = episode_source_from_string(doc.at("source").get<std::string>());
    const json& agents = doc.at("agents");
    if (!agents.is_array()) throw std::invalid_argument("agents: must be an array");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const std::string where = "agents[" + std::to_string(i) + "]";
      AgentTrack track;
      track.name = agents[i].at("name").get<std::string>();
      track.layout = layout_from_json(agents[i], where);
      track.frames = frames_from_json(agents[i].at("frames"), track.layout.total_dim(),
                                      where + ".frames");
      ep.agents.push_back(std::move(track));
    }
    if (doc.contains("events")) {
      for (const auto& [key, value] : doc.at("events").items()) {
        ep.events[key] = value.get<double>();
      }
    }
    ep.validate();
    return ep;
  } catch (const json::exception& e) {
    throw std::invalid_argument(origin + ": schema violation: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
}

Episode load_episode(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open episode file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return episode_from_json(text, path.string());
}

std::string episode_to_json(const Episode& ep) {
  ep.validate();
  json doc;
  doc["id"] = ep.id;
  doc["task"] = ep.task;
  doc["frame_hz"] = ep.frame_hz;
  doc["source"] = to_string(ep.source);
  doc["agents"] = json::array();
  for (const auto& a : ep.agents) {
    json agent;
    agent["name"] = a.name;
    agent["kind"] = to_string(a.layout.agent_kind);
    agent["joint_names"] = a.layout.joint_names;
    json rows = json::array();
    for (int t = 0; t < a.frames.rows(); ++t) {
      json row = json::array();
      for (int c = 0; c < a.frames.cols(); ++c) row.push_back(a.frames(t, c));
      rows.push_back(std::move(row));
    }
    agent["frames"] = std::move(rows);
    doc["agents"].push_back(std::move(agent));
  }
  if (!ep.events.empty()) doc["events"] = ep.events;
  return doc.dump(1) + "\n";
}

void save_episode(const Episode& ep, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write episode file " + path.string());
  out << episode_to_json(ep);
}

Episode resample(const Episode& ep, double target_hz) {
  ep.validate();
  if (target_hz <= 0.0) throw std::invalid_argument("resample: target_hz must be positive");
  const int n_in = ep.frame_count();
  const double duration = (n_in - 1) / ep.frame_hz;
  const int n_out = static_cast<int>(std::lround(duration * target_hz)) + 1;
  if (n_out < 2) throw std::invalid_argument("resample: target rate too low for episode span");

  Episode out = ep;
  out.frame_hz = target_hz;
  for (auto& a : out.agents) {
    const Eigen::MatrixXd& src = ep.agent(a.name).frames;
    Eigen::MatrixXd dst(n_out, src.cols());
    for (int i = 0; i < n_out; ++i) {
      // source-sample position; lands exactly on integers when rates match
      const double s = static_cast<double>(i) * (n_in - 1) / (n_out - 1);
      const int lo = std::min(static_cast<int>(s), n_in - 2);
      const double w = s - lo;
      dst.row(i) = (1.0 - w) * src.row(lo) + w * src.row(lo + 1);
    }
    dst.row(0) = src.row(0);
    dst.row(n_out - 1) = src.row(n_in - 1);
    a.frames = std::move(dst);
  }
  return out;
}

std::vector<TrainingWindow> make_windows(const Episode& ep, int stride) {
  ep.validate();
  if (stride < 1) throw std::invalid_argument("make_windows: stride must be >= 1");
  if (std::abs(ep.frame_hz - kCanonicalHz) > 1e-6) {
    throw std::invalid_argument("make_windows: episode '" + ep.id + "' is at " +
                                std::to_string(ep.frame_hz) + " Hz, expected 15 Hz (resample first)");
  }
  if (ep.agents.size() != 2) {
    throw std::invalid_argument(
        "make_windows: episode '" + ep.id +
        "' must have two agents; pair single-agent clips via compose_synthetic_pair");
  }

  std::vector<TrainingWindow> windows;
  const int n = ep.frame_count();
  if (n < kWindowSpan) return windows;

  const int ego = ep.ego_human_index();
  const int partner = 1 - ego;
  const AgentTrack& ego_track = ep.agents[ego];
  const AgentTrack& partner_track = ep.agents[partner];

  for (int s = 0; s + kWindowSpan <= n; s += stride) {
    TrainingWindow w;
    w.episode_id = ep.id;
    w.task = ep.task;
    w.start_frame = s;
    w.scene.human_history = PoseTrajectory(
        ego_track.layout, ego_track.frames.middleRows(s, kWindowHistory), ep.frame_hz);
    w.scene.partner_history = PoseTrajectory(
        partner_track.layout, partner_track.frames.middleRows(s, kWindowHistory), ep.frame_hz);
    w.scene.partner_future_action = Pose(
        partner_track.layout,
        partner_track.frames.row(s + kWindowSpan - 1).transpose());
    w.scene.target_future = PoseTrajectory(
        ego_track.layout, ego_track.frames.middleRows(s + kWindowHistory, kWindowFuture),
        ep.frame_hz);
    windows.push_back(std::move(w));
  }
  return windows;
}

EpisodeSplits split_episodes(const std::vector<Episode>& episodes, const SplitSpec& spec) {
  if (spec.train <= 0 || spec.val <= 0 || spec.test <= 0) {
    throw std::invalid_argument("split_episodes: ratios must be positive");
  }
  const int n = static_cast<int>(episodes.size());
  const int total = spec.train + spec.val + spec.test;
  const int n_val = n * spec.val / total;
  const int n_test = n * spec.test / total;
  const int n_train = n - n_val - n_test;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw std::invalid_argument("split_episodes: " + std::to_string(n) +
                                " episodes leave an empty split at ratio " +
                                std::to_string(spec.train) + ":" + std::to_string(spec.val) +
                                ":" + std::to_string(spec.test));
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);

  EpisodeSplits splits;
  for (int i = 0; i < n; ++i) {
    const Episode& ep = episodes[order[i]];
    if (i < n_train) {
      splits.train.push_back(ep);
    } else if (i < n_train + n_val) {
      splits.val.push_back(ep);
    } else {
      splits.test.push_back(ep);
    }
  }
  return splits;
}

void save_dataset(const std::vector<Episode>& episodes, const SplitSpec& spec,
                  const fs::path& dir) {
  fs::create_directories(dir / "episodes");
  const EpisodeSplits splits = split_episodes(episodes, spec);
  json manifest;
  manifest["seed"] = spec.seed;
  manifest["ratios"] = {spec.train, spec.val, spec.test};
  auto emit = [&](const char* name, const std::vector<Episode>& eps) {
    json ids = json::array();
    for (const auto& ep : eps) {
      ids.push_back(ep.id);
      save_episode(ep, dir / "episodes" / (ep.id + ".json"));
    }
    manifest["splits"][name] = std::move(ids);
  };
  emit("train", splits.train);
  emit("val", splits.val);
  emit("test", splits.test);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset manifest in " + dir.string());
  out << manifest.dump(1) << "\n";
}

namespace {

json frames_to_json(const Eigen::MatrixXd& frames) {
  json rows = json::array();
  for (int t = 0; t < frames.rows(); ++t) {
    json row = json::array();
    for (int c = 0; c < frames.cols(); ++c) row.push_back(frames(t, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string scene_window_to_json(const SceneWindow& window) {
  window.validate();
  json doc;
  doc["frame_hz"] = window.human_history.frame_hz;
  doc["partner_kind"] = to_string(window.partner_history.layout.agent_kind);
  doc["human_history"] = frames_to_json(window.human_history.frames);
  doc["partner_history"] = frames_to_json(window.partner_history.frames);
  json action = json::array();
  for (int c = 0; c < window.partner_future_action.coords.size(); ++c) {
    action.push_back(window.partner_future_action.coords(c));
  }
  doc["partner_future_action"] = std::move(action);
  if (window.target_future) doc["target_future"] = frames_to_json(window.target_future->frames);
  return doc.dump(1) + "\n";
}

std::pair<SceneWindow, bool> scene_window_from_json(const std::string& text,
                                                    const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ": not valid JSON: " + e.what());
  }
  try {
    const double hz = doc.value("frame_hz", kCanonicalHz);
    const AgentKind partner_kind =
        agent_kind_from_string(doc.value("partner_kind", std::string("human")));
    const JointLayout& partner_layout =
        partner_kind == AgentKind::Robot ? JointLayout::robot() : JointLayout::human();

    SceneWindow w;
    w.human_history = PoseTrajectory(
        JointLayout::human(),
        frames_from_json(doc.at("human_history"), JointLayout::human().total_dim(),
                         "human_history"),
        hz);
    w.partner_history = PoseTrajectory(
        partner_layout,
        frames_from_json(doc.at("partner_history"), partner_layout.total_dim(),
                         "partner_history"),
        hz);

    bool has_action = doc.contains("partner_future_action");
    Eigen::VectorXd action = Eigen::VectorXd::Zero(partner_layout.total_dim());
    if (has_action) {
      const json& row = doc.at("partner_future_action");
      if (static_cast<int>(row.size()) != partner_layout.total_dim()) {
        throw std::invalid_argument("partner_future_action: expected " +
                                    std::to_string(partner_layout.total_dim()) + " values");
      }
      for (int c = 0; c < action.size(); ++c) action(c) = row[c].get<double>();
    }
    w.partner_future_action = Pose(partner_layout, std::move(action));

    if (doc.contains("target_future")) {
      w.target_future = PoseTrajectory(
          JointLayout::human(),
          frames_from_json(doc.at("target_future"), JointLayout::human().total_dim(),
                           "target_future"),
          hz);
    }
    w.validate();
    return {std::move(w), has_action};
  } catch (const json::exception& e) {
    throw std::invalid_argument(origin + ": schema violation: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
}

EpisodeSplits load_dataset(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::invalid_argument("no dataset manifest at " + (dir / "manifest.json").string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("dataset manifest is not valid JSON: " + std::string(e.what()));
  }
  EpisodeSplits splits;
  auto read = [&](const char* name, std::vector<Episode>& eps) {
    for (const auto& id : manifest.at("splits").at(name)) {
      eps.push_back(load_episode(dir / "episodes" / (id.get<std::string>() + ".json")));
    }
  };
  read("train", splits.train);
  read("val", splits.val);
  read("test", splits.test);
  return splits;
}

}  // namespace interact
