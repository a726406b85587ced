#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "interact/episode.hpp"
#include "interact/retarget.hpp"
#include "interact/rng.hpp"
#include "interact/synth.hpp"
#include "interact/util.hpp"

using namespace interact;
namespace fs = std::filesystem;

namespace {

Episode single_human(const std::string& id, int n, double hz = 15.0, double base = 0.0) {
  Episode ep;
  ep.id = id;
  ep.task = "unit";
  ep.frame_hz = hz;
  ep.source = EpisodeSource::Recorded;
  Eigen::MatrixXd frames(n, 27);
  for (int t = 0; t < n; ++t) {
    for (int c = 0; c < 27; ++c) frames(t, c) = base + 0.01 * t + 0.001 * c;
  }
  ep.agents.push_back({"human", JointLayout::human(), frames});
  return ep;
}

Episode two_agent(const std::string& id, int n) {
  Episode ep = single_human(id, n);
  Eigen::MatrixXd partner(n, 27);
  for (int t = 0; t < n; ++t) {
    for (int c = 0; c < 27; ++c) partner(t, c) = 5.0 + 0.02 * t + 0.001 * c;
  }
  ep.agents.push_back({"partner", JointLayout::human(), partner});
  return ep;
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("interact_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// brute-force clearance oracle, independent of the generator's own check
double min_pairwise_distance(const Episode& ep) {
  const auto& a = ep.agents[0].frames;
  const auto& b = ep.agents[1].frames;
  double best = 1e300;
  for (int t = 0; t < a.rows(); ++t) {
    for (int i = 0; i < a.cols() / 3; ++i) {
      for (int j = 0; j < b.cols() / 3; ++j) {
        const double d = (a.row(t).segment<3>(3 * i) - b.row(t).segment<3>(3 * j)).norm();
        best = std::min(best, d);
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("episode json loads, validates, and roundtrips byte-identically") {
  const fs::path dir = temp_dir("episode_io");

  SUBCASE("minimal valid two-frame single-human file") {
    const Episode ep = single_human("mini", 2);
    save_episode(ep, dir / "mini.json");
    const Episode back = load_episode(dir / "mini.json");
    CHECK(back.frame_count() == 2);
    CHECK(back.id == "mini");
    CHECK(back.agents[0].layout == JointLayout::human());
  }

  SUBCASE("canonicalized files re-save to identical bytes") {
    const Episode ep = two_agent("bytes", 31);
    save_episode(ep, dir / "a.json");
    const Episode loaded = load_episode(dir / "a.json");
    save_episode(loaded, dir / "b.json");
    CHECK(read_text_file(dir / "a.json") == read_text_file(dir / "b.json"));
  }

  SUBCASE("unequal agent frame counts are rejected naming both counts") {
    Episode ep = two_agent("uneven", 8);
    ep.agents[1].frames = ep.agents[1].frames.topRows(5);
    try {
      ep.validate();
      FAIL("expected a validation error");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("8") != std::string::npos);
      CHECK(msg.find("5") != std::string::npos);
    }
  }

  SUBCASE("non-finite coordinates are rejected with the frame index") {
    Episode ep = single_human("nan", 3);
    ep.agents[0].frames(2, 4) = std::numeric_limits<double>::quiet_NaN();
    try {
      ep.validate();
      FAIL("expected a validation error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("frames[2]") != std::string::npos);
    }
    // at the file level, an overflowing literal is rejected while parsing
    std::string text = episode_to_json(single_human("nan", 3));
    const auto at = text.find("0.01");
    text.replace(at, 4, "1e999");
    CHECK_THROWS_AS((void)episode_from_json(text, "nan.json"), std::invalid_argument);
  }

  SUBCASE("unknown joint layouts are rejected") {
    std::string text = episode_to_json(single_human("layout", 3));
    const auto at = text.find("upper_back");
    text.replace(at, 10, "lower_back");
    CHECK_THROWS_AS((void)episode_from_json(text), std::invalid_argument);
  }

  SUBCASE("three agents are rejected") {
    Episode ep = two_agent("three", 4);
    ep.agents.push_back(ep.agents[0]);
    ep.agents[2].name = "ghost";
    CHECK_THROWS_AS(ep.validate(), std::invalid_argument);
  }
}

TEST_CASE("resample preserves endpoints, rates, and linearity") {
  SUBCASE("identical rate returns identical frames") {
    const Episode ep = single_human("same", 40);
    const Episode out = resample(ep, 15.0);
    CHECK(out.agents[0].frames == ep.agents[0].frames);
  }

  SUBCASE("linear ramps stay exactly on the ramp") {
    Episode ep = single_human("ramp", 33, 120.0);
    for (int t = 0; t < 33; ++t) ep.agents[0].frames.row(t).setConstant(0.5 * t);
    const Episode out = resample(ep, 15.0);
    const double dt_ratio = 120.0 / 15.0;
    for (int i = 0; i < out.frame_count(); ++i) {
      CHECK(out.agents[0].frames(i, 0) == doctest::Approx(0.5 * dt_ratio * i).epsilon(1e-12));
    }
  }

  SUBCASE("endpoint-inclusive frame counting: 8 s of 120 Hz at 15 Hz is 121 frames") {
    const Episode ep = single_human("count", 961, 120.0);  // 960 intervals = 8 s
    const Episode out = resample(ep, 15.0);
    CHECK(out.frame_count() == 121);  // 15 * 8 + 1
    CHECK(out.agents[0].frames.row(0) == ep.agents[0].frames.row(0));
    CHECK(out.agents[0].frames.row(120) == ep.agents[0].frames.row(960));
  }
}

TEST_CASE("make_windows slices 30-frame examples") {
  SUBCASE("window counts match the sliding arithmetic") {
    CHECK(make_windows(two_agent("w", 450), 1).size() == 421);
    CHECK(make_windows(two_agent("w", 450), 15).size() == 29);
    CHECK(make_windows(two_agent("w", 29), 1).empty());
  }

  SUBCASE("single-agent episodes are rejected") {
    CHECK_THROWS_AS((void)make_windows(single_human("solo", 60), 1), std::invalid_argument);
  }

  SUBCASE("wrong rate is rejected") {
    CHECK_THROWS_AS((void)make_windows(single_human("hz", 60, 120.0), 1),
                    std::invalid_argument);
  }

  SUBCASE("window contents slice history, future, and the final-frame action") {
    const Episode ep = two_agent("slices", 64);
    const auto windows = make_windows(ep, 5);
    REQUIRE(!windows.empty());
    const TrainingWindow& w = windows[1];
    CHECK(w.start_frame == 5);
    CHECK(w.scene.human_history.frames == ep.agents[0].frames.middleRows(5, 15));
    CHECK(w.scene.partner_history.frames == ep.agents[1].frames.middleRows(5, 15));
    CHECK(w.scene.target_future->frames == ep.agents[0].frames.middleRows(20, 15));
    CHECK(w.scene.partner_future_action.coords.transpose() == ep.agents[1].frames.row(34));
    CHECK(w.task == "unit");
    CHECK(w.episode_id == "slices");
  }

  SUBCASE("the human agent is the ego stream regardless of order") {
    Episode ep = two_agent("order", 40);
    ep.agents[0] = {"robot", JointLayout::robot(), Eigen::MatrixXd::Zero(40, 6)};
    const auto windows = make_windows(ep, 10);
    REQUIRE(!windows.empty());
    CHECK(windows[0].scene.human_history.layout.agent_kind == AgentKind::Human);
    CHECK(windows[0].scene.partner_history.layout.agent_kind == AgentKind::Robot);
  }
}

TEST_CASE("split_episodes is seeded, exact, and leak-free") {
  std::vector<Episode> episodes;
  for (int i = 0; i < 270; ++i) episodes.push_back(single_human("ep" + std::to_string(i), 2));

  SUBCASE("270 episodes split 216/27/27") {
    const EpisodeSplits s = split_episodes(episodes, SplitSpec{8, 1, 1, 99});
    CHECK(s.train.size() == 216);
    CHECK(s.val.size() == 27);
    CHECK(s.test.size() == 27);
  }

  SUBCASE("10 episodes split 8/1/1") {
    episodes.resize(10);
    const EpisodeSplits s = split_episodes(episodes, SplitSpec{8, 1, 1, 1});
    CHECK(s.train.size() == 8);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 1);
  }

  SUBCASE("identical seeds give identical assignments, disjoint ids") {
    const EpisodeSplits a = split_episodes(episodes, SplitSpec{8, 1, 1, 7});
    const EpisodeSplits b = split_episodes(episodes, SplitSpec{8, 1, 1, 7});
    std::set<std::string> train_ids, other_ids;
    for (std::size_t i = 0; i < a.train.size(); ++i) {
      CHECK(a.train[i].id == b.train[i].id);
      train_ids.insert(a.train[i].id);
    }
    for (const auto& ep : a.val) other_ids.insert(ep.id);
    for (const auto& ep : a.test) other_ids.insert(ep.id);
    for (const auto& id : other_ids) CHECK(train_ids.count(id) == 0);
  }

  SUBCASE("too few episodes for a split is an error") {
    episodes.resize(5);
    CHECK_THROWS_AS((void)split_episodes(episodes, SplitSpec{8, 1, 1, 0}),
                    std::invalid_argument);
  }
}

TEST_CASE("dataset directories roundtrip through the manifest") {
  const fs::path dir = temp_dir("dataset_dir");
  std::vector<Episode> episodes;
  for (int i = 0; i < 12; ++i) episodes.push_back(two_agent("ep" + std::to_string(i), 34));
  save_dataset(episodes, SplitSpec{8, 1, 1, 3}, dir);
  const EpisodeSplits splits = load_dataset(dir);
  CHECK(splits.train.size() == 10);
  CHECK(splits.val.size() == 1);
  CHECK(splits.test.size() == 1);
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("compose_synthetic_pair is deterministic and respects clearance") {
  const Episode a = single_human("a", 50);
  Episode b = single_human("b", 60, 15.0, 0.3);

  SynthConfig cfg;
  cfg.seed = 12;
  cfg.min_separation = 0.05;
  cfg.workspace_radius = 3.0;

  SUBCASE("same seed twice is byte-identical") {
    const Episode p1 = compose_synthetic_pair(a, b, cfg);
    const Episode p2 = compose_synthetic_pair(a, b, cfg);
    CHECK(episode_to_json(p1) == episode_to_json(p2));
    CHECK(p1.frame_count() == 50);
    CHECK(p1.agents.size() == 2);
    CHECK(p1.source == EpisodeSource::SyntheticPair);
  }

  SUBCASE("placements satisfy min_separation under the brute-force oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SynthConfig c = cfg;
      c.seed = seed;
      c.min_separation = 0.4;
      c.workspace_radius = 4.0;
      CHECK(min_pairwise_distance(compose_synthetic_pair(a, b, c)) >= 0.4);
    }
  }

  SUBCASE("geometrically infeasible margins error out") {
    SynthConfig c = cfg;
    c.workspace_radius = 0.5;
    c.min_separation = 100.0;
    CHECK_THROWS_AS((void)compose_synthetic_pair(a, b, c), std::runtime_error);
  }
}

TEST_CASE("min-jerk reaches satisfy the boundary conditions") {
  CHECK(min_jerk_factor(0.0) == 0.0);
  CHECK(min_jerk_factor(1.0) == 1.0);
  const double h = 1e-4;
  CHECK(std::abs(min_jerk_factor(h) - min_jerk_factor(0.0)) / h < 1e-6);
  CHECK(std::abs(min_jerk_factor(1.0) - min_jerk_factor(1.0 - h)) / h < 1e-6);
}

TEST_CASE("conflict-reach generation") {
  SynthConfig cfg;
  cfg.seed = 77;
  cfg.objects = {Eigen::Vector3d(0.45, -0.35, 0.95), Eigen::Vector3d(0.45, 0.35, 0.95)};

  SUBCASE("human always reaches for the other object") {
    for (const auto& ep : gen_conflict_reach(cfg, 24, AgentKind::Human)) {
      CHECK(ep.events.at("human_target") == 1 - ep.events.at("partner_choice"));
      CHECK(ep.task == "conflict_reach");
      CHECK(ep.source == EpisodeSource::Procedural);
      CHECK(ep.frame_count() >= kWindowSpan);
    }
  }

  SUBCASE("same seed gives identical episode sets") {
    const auto a = gen_conflict_reach(cfg, 6, AgentKind::Robot);
    const auto b = gen_conflict_reach(cfg, 6, AgentKind::Robot);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(episode_to_json(a[i]) == episode_to_json(b[i]));
    }
  }

  SUBCASE("partner arm executes the min-jerk endpoints") {
    const Episode ep = conflict_reach_episode(cfg, 5, AgentKind::Human, 1);
    const int commit = static_cast<int>(ep.events.at("commit_frame"));
    const auto& partner = ep.agent("partner");
    const int hand_col = 3 * JointLayout::human().joint_index("r_hand");
    const Eigen::Vector3d final_hand =
        partner.frames.row(ep.frame_count() - 1).segment<3>(hand_col).transpose();
    CHECK((final_hand - cfg.objects[1]).norm() < 1e-9);
    // hand barely moves in the first commit frame and is settled at the end
    const Eigen::Vector3d at_commit =
        partner.frames.row(commit).segment<3>(hand_col).transpose();
    const Eigen::Vector3d next =
        partner.frames.row(commit + 1).segment<3>(hand_col).transpose();
    CHECK((next - at_commit).norm() < 0.05);
  }

  SUBCASE("pre-onset human motion is independent of the partner's choice") {
    for (int index : {0, 3, 9}) {
      const Episode left = conflict_reach_episode(cfg, index, AgentKind::Human, 0);
      const Episode right = conflict_reach_episode(cfg, index, AgentKind::Human, 1);
      const int onset = static_cast<int>(
          std::min(left.events.at("onset_frame"), right.events.at("onset_frame")));
      const int commit = static_cast<int>(left.events.at("commit_frame"));
      CHECK(left.events.at("commit_frame") == right.events.at("commit_frame"));
      CHECK(onset > commit);
      CHECK(left.agents[0].frames.topRows(onset) == right.agents[0].frames.topRows(onset));
      CHECK(left.agents[1].frames.topRows(commit) == right.agents[1].frames.topRows(commit));
    }
  }

  SUBCASE("partner choice is near-uniform over a fixed-seed set") {
    int picks_of_one = 0;
    const int n = 400;
    for (const auto& ep : gen_conflict_reach(cfg, n, AgentKind::Human)) {
      picks_of_one += static_cast<int>(ep.events.at("partner_choice"));
    }
    const double freq = static_cast<double>(picks_of_one) / n;
    CHECK(std::abs(freq - 0.5) <= 0.05);
  }

  SUBCASE("robot partners carry the marker layout") {
    const Episode ep = conflict_reach_episode(cfg, 2, AgentKind::Robot, 0);
    CHECK(ep.agents[1].layout == JointLayout::robot());
    CHECK(ep.agents[1].frames.cols() == 6);
  }

  SUBCASE("two objects are required") {
    SynthConfig bad = cfg;
    bad.objects.resize(1);
    CHECK_THROWS_AS((void)conflict_reach_episode(bad, 0, AgentKind::Human, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("teleop episodes pair the driver with the retargeted robot") {
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.objects = {Eigen::Vector3d(0.45, -0.35, 0.95), Eigen::Vector3d(0.45, 0.35, 0.95)};
  const Episode source = conflict_reach_episode(cfg, 1, AgentKind::Human, 0);
  const Episode teleop = make_teleop_episode(source, /*agent_index=*/1);
  CHECK(teleop.agents.size() == 2);
  CHECK(teleop.agents[1].layout == JointLayout::robot());
  CHECK(teleop.frame_count() == source.frame_count());

  const PairedPoseDataset pairs = build_paired_set(teleop);
  CHECK(pairs.size() == source.frame_count());
  CHECK(pairs.source_episode_ids == std::vector<std::string>{teleop.id});

  // consistency oracle: every robot pose equals the retarget of its human pose
  for (int k = 0; k < pairs.size(); k += 7) {
    const Pose human(JointLayout::human(), pairs.human_poses.row(k).transpose());
    const Pose robot = ee_to_marker_pose(hand_frame(human, ArmSide::Right), MarkerLayout{});
    CHECK((pairs.robot_poses.row(k).transpose() - robot.coords).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("mismatched frame counts are rejected") {
    Episode broken = teleop;
    broken.agents[1].frames = broken.agents[1].frames.topRows(10);
    CHECK_THROWS_AS((void)build_paired_set(broken), std::invalid_argument);
  }

  SUBCASE("paired sets roundtrip through files") {
    const fs::path dir = temp_dir("pairs");
    save_paired_set(pairs, dir / "pairs.json");
    const PairedPoseDataset back = load_paired_set(dir / "pairs.json");
    CHECK(back.size() == pairs.size());
    CHECK(back.robot_poses == pairs.robot_poses);
    CHECK(back.human_poses == pairs.human_poses);
  }
}
