#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "interact/checkpoint.hpp"
#include "interact/config.hpp"
#include "interact/episode.hpp"
#include "interact/synth.hpp"
#include "interact/util.hpp"
#include "interact/verify.hpp"

using namespace interact;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("interact_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the built binary (path via INTERACT_CLI) and captures stdout+stderr.
struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const char* cli = std::getenv("INTERACT_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "INTERACT_CLI must point at the built binary");
  const fs::path out = fs::temp_directory_path() /
                       ("interact_cli_out_" + std::to_string(fnv1a64(args)) + ".txt");
  const std::string cmd = std::string(cli) + " " + args + " > " + out.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.output = read_text_file(out);
  fs::remove(out);
  return result;
}

}  // namespace

TEST_CASE("config resolution") {
  SUBCASE("defaults materialize the stage-dependent values") {
    const json cfg = json::parse(resolve_config("", {}, std::nullopt));
    CHECK(cfg["train"]["epochs"] == 50);
    CHECK(cfg["train"]["batch_size"] == 256);
    CHECK(cfg["train"]["base_lr"] == 3e-4);
    CHECK(cfg["train"]["lambda_p"] == 1.0);
    CHECK(cfg["train"]["lambda_h"] == 0.1);
    CHECK(cfg["train"]["lambda_f"] == 0.1);
    CHECK(cfg["train"]["milestones"] == json::array({15, 25, 35, 40}));
    CHECK(cfg["model"]["layers"] == 3);
    CHECK(cfg["model"]["horizon"] == 15);
  }

  SUBCASE("the finetune stage flips the defaults") {
    const json cfg = json::parse(resolve_config("", {"train.stage=finetune"}, std::nullopt));
    CHECK(cfg["train"]["epochs"] == 30);
    CHECK(cfg["train"]["batch_size"] == 64);
    CHECK(cfg["train"]["base_lr"] == 1e-4);
  }

  SUBCASE("file values and overrides win in order") {
    const std::string file = R"({"train": {"lambda_h": 0.15}, "seed": 7})";
    const json no_override = json::parse(resolve_config(file, {}, std::nullopt));
    CHECK(no_override["train"]["lambda_h"] == 0.15);
    CHECK(no_override["seed"] == 7);

    const json with_override =
        json::parse(resolve_config(file, {"train.lambda_h=0.2"}, std::nullopt));
    CHECK(with_override["train"]["lambda_h"] == 0.2);
  }

  SUBCASE("unknown keys name the full path") {
    try {
      (void)resolve_config("", {"train.lamda_h=0.2"}, std::nullopt);
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("train.lamda_h") != std::string::npos);
    }
    CHECK_THROWS_AS((void)resolve_config(R"({"trian": {}})", {}, std::nullopt), ConfigError);
  }

  SUBCASE("type mismatches are rejected") {
    CHECK_THROWS_AS((void)resolve_config(R"({"train": {"epochs": "many"}})", {}, std::nullopt),
                    ConfigError);
    CHECK_THROWS_AS((void)resolve_config("", {"model.embed_dim=big"}, std::nullopt),
                    ConfigError);
  }

  SUBCASE("the environment seed is a fallback only") {
    const json env_only = json::parse(resolve_config("", {}, 123));
    CHECK(env_only["seed"] == 123);
    const json file_wins = json::parse(resolve_config(R"({"seed": 9})", {}, 123));
    CHECK(file_wins["seed"] == 9);
    const json override_wins = json::parse(resolve_config(R"({"seed": 9})", {"seed=4"}, 123));
    CHECK(override_wins["seed"] == 4);
  }

  SUBCASE("malformed JSON files are config errors") {
    CHECK_THROWS_AS((void)resolve_config("{not json", {}, std::nullopt), ConfigError);
  }
}

TEST_CASE("run manifests hash the reproducible inputs only") {
  const fs::path dir = temp_dir("manifest");
  std::ofstream(dir / "input.txt") << "payload";

  const std::string cfg = resolve_config("", {}, std::nullopt);
  RunManifest m1 = start_manifest("eval", cfg, 1, {dir / "input.txt"}, {"out.csv"});
  RunManifest m2 = start_manifest("eval", cfg, 1, {dir / "input.txt"}, {"out.csv"});
  m2.wall_clock_seconds = 99.0;  // informational fields do not move the hash
  m2.started_at = "2000-01-01T00:00:00Z";
  CHECK(m1.hash() == m2.hash());

  RunManifest m3 = start_manifest("eval", cfg, 2, {dir / "input.txt"}, {"out.csv"});
  CHECK(m1.hash() != m3.hash());

  m1.write(dir / "run_manifest.json");
  const json doc = json::parse(read_text_file(dir / "run_manifest.json"));
  CHECK(doc["manifest_hash"] == m1.hash());
  CHECK(doc["inputs"].size() == 1);
}

TEST_CASE("cli: usage and config errors exit 2") {
  CHECK(run_cli("synth train.lamda_h=0.2 synth.out_dir=/tmp/x").exit_code == 2);
  CHECK(run_cli("no_such_command").exit_code == 2);
  const CliResult missing = run_cli("pretrain");  // data.dir required
  CHECK(missing.exit_code == 2);
  CHECK(missing.output.find("config error:") != std::string::npos);
}

TEST_CASE("cli: synth writes a deterministic dataset") {
  const fs::path dir = temp_dir("synth");
  const std::string args = "synth synth.out_dir=" + (dir / "data").string() +
                           " synth.n_episodes=12 seed=3";
  CHECK(run_cli(args).exit_code == 0);
  CHECK(fs::exists(dir / "data" / "manifest.json"));
  CHECK(fs::exists(dir / "data" / "run_manifest.json"));
  const EpisodeSplits splits = load_dataset(dir / "data");
  CHECK(splits.train.size() == 10);
  CHECK(splits.val.size() == 1);
  CHECK(splits.test.size() == 1);

  // byte-identical episodes on a rerun with the same seed
  const std::string args2 = "synth synth.out_dir=" + (dir / "data2").string() +
                            " synth.n_episodes=12 seed=3";
  CHECK(run_cli(args2).exit_code == 0);
  const auto first_episode = [&](const fs::path& root) {
    for (const auto& entry : fs::directory_iterator(root / "episodes")) return entry.path();
    return fs::path();
  };
  CHECK(read_text_file(first_episode(dir / "data")) ==
        read_text_file(first_episode(dir / "data2")));
}

TEST_CASE("cli: train, eval, predict, and retarget round out the pipeline") {
  const fs::path dir = temp_dir("pipeline");
  const fs::path data = dir / "data";
  REQUIRE(run_cli("synth synth.out_dir=" + data.string() +
                  " synth.n_episodes=12 seed=5").exit_code == 0);

  SUBCASE("pretrain then eval") {
    const fs::path ckpt = dir / "model.ckpt";
    const std::string train_args =
        "pretrain --config /dev/null data.dir=" + data.string() +
        " train.checkpoint_out=" + ckpt.string() +
        " train.epochs=2 train.batch_size=32 model.embed_dim=16 model.heads=2"
        " model.layers=1 train.metrics_csv=" + (dir / "metrics_log.csv").string();
    const CliResult train = run_cli(train_args);
    INFO(train.output);
    CHECK(train.exit_code == 0);
    CHECK(fs::exists(ckpt));

    const std::string eval_args = "eval data.dir=" + data.string() +
                                  " eval.out_dir=" + (dir / "eval").string() +
                                  " 'eval.checkpoints=[\"" + ckpt.string() + "\"]'" +
                                  " eval.svg=true eval.dump_raw=true";
    const CliResult eval = run_cli(eval_args);
    INFO(eval.output);
    CHECK(eval.exit_code == 0);
    CHECK(fs::exists(dir / "eval" / "metrics.csv"));
    CHECK(fs::exists(dir / "eval" / "metrics.svg"));

    // eval on a window file via predict
    const EpisodeSplits splits = load_dataset(data);
    const auto windows = make_windows(splits.test[0], 5);
    REQUIRE(!windows.empty());
    std::ofstream(dir / "window.json") << scene_window_to_json(windows[0].scene);
    const std::string predict_args = "predict predict.window=" + (dir / "window.json").string() +
                                     " predict.checkpoint=" + ckpt.string() +
                                     " predict.out=" + (dir / "forecast.json").string();
    const CliResult predict = run_cli(predict_args);
    INFO(predict.output);
    CHECK(predict.exit_code == 0);
    const json forecast = json::parse(read_text_file(dir / "forecast.json"));
    CHECK(forecast["forecast"].size() == 15);
    CHECK(forecast["forecast"][0].size() == 27);
    CHECK(forecast.contains("manifest_hash"));
  }

  SUBCASE("eval with an empty test split exits 1 naming the problem") {
    // dataset with no test episodes: doctor the manifest
    const fs::path broken = dir / "broken";
    fs::create_directories(broken);
    fs::copy(data, broken, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    json manifest = json::parse(read_text_file(broken / "manifest.json"));
    manifest["splits"]["test"] = json::array();
    std::ofstream(broken / "manifest.json") << manifest.dump(1);

    ModelConfig tiny;
    tiny.embed_dim = 16;
    tiny.heads = 2;
    tiny.layers = 1;
    InteractModel<float> model(tiny, 1);
    const fs::path ckpt = dir / "tiny.ckpt";
    save_checkpoint(ckpt, model);

    const CliResult eval = run_cli("eval data.dir=" + broken.string() +
                                   " eval.out_dir=" + (dir / "eval2").string() +
                                   " 'eval.checkpoints=[\"" + ckpt.string() + "\"]'");
    CHECK(eval.exit_code == 1);
    CHECK(eval.output.find("empty split") != std::string::npos);
  }

  SUBCASE("retarget emits a teleop episode and paired set") {
    const EpisodeSplits splits = load_dataset(data);
    const fs::path human_ep = dir / "human_ep.json";
    save_episode(splits.train[0], human_ep);
    const std::string args = "retarget retarget.episode=" + human_ep.string() +
                             " retarget.agent_index=1" +
                             " retarget.out_episode=" + (dir / "teleop.json").string() +
                             " retarget.out_pairs=" + (dir / "pairs.json").string();
    const CliResult result = run_cli(args);
    INFO(result.output);
    CHECK(result.exit_code == 0);
    const Episode teleop = load_episode(dir / "teleop.json");
    CHECK(teleop.agents.size() == 2);
    CHECK(teleop.agents[1].layout == JointLayout::robot());
    const PairedPoseDataset pairs = load_paired_set(dir / "pairs.json");
    CHECK(pairs.size() == teleop.frame_count());
  }
}
