// Command-line front end for the intent-forecasting pipeline: data synthesis,
// two-stage training, evaluation, single-window prediction, retargeting, and
// numerical self-verification.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "interact/checkpoint.hpp"
#include "interact/config.hpp"
#include "interact/episode.hpp"
#include "interact/eval.hpp"
#include "interact/model.hpp"
#include "interact/synth.hpp"
#include "interact/trainer.hpp"
#include "interact/util.hpp"
#include "interact/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace interact;

namespace {

std::string require_path(const json& cfg, const std::string& section, const std::string& key) {
  const std::string value = cfg.at(section).at(key).get<std::string>();
  if (value.empty()) {
    throw ConfigError("missing required key '" + section + "." + key + "'");
  }
  return value;
}

Eigen::Vector3d vec3_from(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.size() != 3) {
    throw ConfigError("config key '" + where + "' must be a 3-element array");
  }
  return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

SynthConfig synth_config_from(const json& cfg) {
  const json& s = cfg.at("synth");
  SynthConfig sc;
  sc.min_separation = s.at("min_separation").get<double>();
  sc.workspace_radius = s.at("workspace_radius").get<double>();
  sc.yaw_range = s.at("yaw_range").get<double>();
  sc.seed = cfg.at("seed").get<std::uint64_t>();
  for (std::size_t i = 0; i < s.at("objects").size(); ++i) {
    sc.objects.push_back(vec3_from(s.at("objects")[i], "synth.objects[" + std::to_string(i) + "]"));
  }
  return sc;
}

ModelConfig model_config_from(const json& cfg) {
  const json& m = cfg.at("model");
  ModelConfig mc;
  mc.embed_dim = m.at("embed_dim").get<int>();
  mc.layers = m.at("layers").get<int>();
  mc.heads = m.at("heads").get<int>();
  mc.horizon = m.at("horizon").get<int>();
  mc.variant = variant_from_string(m.at("variant").get<std::string>());
  try {
    mc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return mc;
}

TrainConfig train_config_from(const json& cfg) {
  const json& t = cfg.at("train");
  TrainConfig tc;
  tc.stage = train_stage_from_string(t.at("stage").get<std::string>());
  tc.epochs = t.at("epochs").get<int>();
  tc.batch_size = t.at("batch_size").get<int>();
  tc.base_lr = t.at("base_lr").get<double>();
  tc.milestones = t.at("milestones").get<std::vector<int>>();
  tc.gamma = t.at("gamma").get<double>();
  tc.weights.lambda_p = t.at("lambda_p").get<double>();
  tc.weights.lambda_h = t.at("lambda_h").get<double>();
  tc.weights.lambda_f = t.at("lambda_f").get<double>();
  tc.weight_decay = t.at("weight_decay").get<double>();
  tc.align_enabled = t.at("align").get<bool>();
  tc.align_pairs_per_batch = t.at("align_pairs_per_batch").get<int>();
  tc.seed = cfg.at("seed").get<std::uint64_t>();
  tc.window_stride = cfg.at("data").at("window_stride").get<int>();
  return tc;
}

std::vector<fs::path> dataset_input_files(const fs::path& dir) {
  std::vector<fs::path> files;
  files.push_back(dir / "manifest.json");
  std::vector<fs::path> episodes;
  for (const auto& entry : fs::directory_iterator(dir / "episodes")) {
    if (entry.path().extension() == ".json") episodes.push_back(entry.path());
  }
  std::sort(episodes.begin(), episodes.end());
  files.insert(files.end(), episodes.begin(), episodes.end());
  return files;
}

void finish_manifest(RunManifest& manifest, const fs::path& run_dir,
                     std::chrono::steady_clock::time_point started) {
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  manifest.write(run_dir / "run_manifest.json");
}

// ---- subcommands -----------------------------------------------------------

int run_synth(const json& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const fs::path out_dir = require_path(cfg, "synth", "out_dir");
  const SynthConfig sc = synth_config_from(cfg);
  const json& s = cfg.at("synth");
  const std::string task = s.at("task").get<std::string>();

  std::vector<Episode> episodes;
  std::vector<fs::path> inputs;
  if (task == "conflict_reach") {
    const AgentKind partner = agent_kind_from_string(s.at("partner").get<std::string>());
    episodes = gen_conflict_reach(sc, s.at("n_episodes").get<int>(), partner);
  } else if (task == "synthetic_pair") {
    const auto sources = s.at("sources").get<std::vector<std::string>>();
    if (sources.size() < 2 || sources.size() % 2 != 0) {
      throw ConfigError("synth.sources must list an even number (>= 2) of episode files");
    }
    for (std::size_t i = 0; i + 1 < sources.size(); i += 2) {
      inputs.emplace_back(sources[i]);
      inputs.emplace_back(sources[i + 1]);
      SynthConfig pair_cfg = sc;
      pair_cfg.seed = sc.seed + i / 2;
      episodes.push_back(compose_synthetic_pair(load_episode(sources[i]),
                                                load_episode(sources[i + 1]), pair_cfg));
    }
  } else {
    throw ConfigError("synth.task must be 'conflict_reach' or 'synthetic_pair'");
  }

  fs::create_directories(out_dir);
  RunManifest manifest = start_manifest("synth", cfg.dump(1), sc.seed, inputs,
                                        {(out_dir / "manifest.json").string(),
                                         (out_dir / "episodes").string()});
  manifest.write(out_dir / "run_manifest.json");

  SplitSpec split;
  split.train = cfg.at("data").at("split_train").get<int>();
  split.val = cfg.at("data").at("split_val").get<int>();
  split.test = cfg.at("data").at("split_test").get<int>();
  split.seed = sc.seed;
  save_dataset(episodes, split, out_dir);

  finish_manifest(manifest, out_dir, started);
  std::cout << "wrote " << episodes.size() << " episodes to " << out_dir.string() << "\n";
  return 0;
}

int run_training(const json& cfg, TrainStage stage) {
  const auto started = std::chrono::steady_clock::now();
  const fs::path data_dir = require_path(cfg, "data", "dir");
  const fs::path checkpoint_out = require_path(cfg, "train", "checkpoint_out");
  TrainConfig tc = train_config_from(cfg);
  tc.stage = stage;

  std::vector<fs::path> inputs = dataset_input_files(data_dir);

  std::unique_ptr<InteractModel<float>> model;
  if (stage == TrainStage::Finetune) {
    const fs::path checkpoint_in = require_path(cfg, "train", "checkpoint_in");
    inputs.push_back(checkpoint_in);
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_in);
    model = std::move(loaded.model);
    model->set_variant(model_config_from(cfg).variant);
  } else {
    model = std::make_unique<InteractModel<float>>(model_config_from(cfg),
                                                   cfg.at("seed").get<std::uint64_t>());
  }

  if (tc.align_enabled) {
    const fs::path paired_path = require_path(cfg, "train", "paired_set");
    inputs.push_back(paired_path);
    tc.paired_set = load_paired_set(paired_path);
  }

  const std::string metrics_csv = cfg.at("train").at("metrics_csv").get<std::string>();
  const fs::path run_dir = checkpoint_out.parent_path().empty()
                               ? fs::path(".")
                               : checkpoint_out.parent_path();
  fs::create_directories(run_dir);

  std::vector<std::string> outputs = {checkpoint_out.string()};
  if (!metrics_csv.empty()) outputs.push_back(metrics_csv);
  RunManifest manifest = start_manifest(to_string(stage), cfg.dump(1), tc.seed, inputs, outputs);
  manifest.write(run_dir / "run_manifest.json");

  const EpisodeSplits splits = load_dataset(data_dir);
  const TrainResult result = run_stage(*model, splits, tc, metrics_csv, manifest.hash());

  save_checkpoint(checkpoint_out, *model, &result.best_optimizer, result.best_epoch,
                  result.rng_state);
  finish_manifest(manifest, run_dir, started);
  std::cout << to_string(stage) << " done: best val FDE "
            << result.best_val_fde << " m at epoch " << result.best_epoch << ", checkpoint "
            << checkpoint_out.string() << "\n";
  return 0;
}

int run_eval(const json& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const fs::path data_dir = require_path(cfg, "data", "dir");
  const fs::path out_dir = require_path(cfg, "eval", "out_dir");
  const json& e = cfg.at("eval");
  const auto checkpoint_paths = e.at("checkpoints").get<std::vector<std::string>>();
  if (checkpoint_paths.empty()) {
    throw ConfigError("eval.checkpoints must list at least one checkpoint");
  }
  auto labels = e.at("labels").get<std::vector<std::string>>();

  std::vector<fs::path> inputs = dataset_input_files(data_dir);
  for (const auto& p : checkpoint_paths) inputs.emplace_back(p);

  fs::create_directories(out_dir);
  RunManifest manifest =
      start_manifest("eval", cfg.dump(1), cfg.at("seed").get<std::uint64_t>(), inputs,
                     {(out_dir / "metrics.csv").string()});
  manifest.write(out_dir / "run_manifest.json");
  const std::string hash = manifest.hash();

  const EpisodeSplits splits = load_dataset(data_dir);
  if (splits.test.empty()) throw std::runtime_error("empty split: dataset has no test episodes");
  const int stride = cfg.at("data").at("window_stride").get<int>();
  std::vector<TrainingWindow> test_windows;
  for (const auto& ep : splits.test) {
    auto w = make_windows(ep, stride);
    test_windows.insert(test_windows.end(), w.begin(), w.end());
  }
  if (test_windows.empty()) throw std::runtime_error("empty split: test episodes yield no windows");

  std::vector<std::unique_ptr<InteractModel<float>>> models;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < checkpoint_paths.size(); ++i) {
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_paths[i]);
    names.push_back(i < labels.size() ? labels[i] : to_string(loaded.config.variant));
    models.push_back(std::move(loaded.model));
  }

  std::vector<MetricsTable> tables;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto scores = score_windows(*models[i], test_windows);
    tables.push_back(aggregate_scores(scores, names[i]));
    if (e.at("dump_raw").get<bool>()) {
      write_raw_scores_csv(out_dir / ("raw_" + names[i] + ".csv"), names[i], scores, hash);
    }
  }
  write_metrics_csv(out_dir / "metrics.csv", tables, hash);
  if (models.size() > 1) {
    write_comparison_csv(out_dir / "comparison.csv", compare(tables), hash);
  }

  const int trace_count = std::min<int>(e.at("traces").get<int>(),
                                        static_cast<int>(splits.test.size()));
  for (int i = 0; i < trace_count; ++i) {
    std::vector<std::pair<std::string, const InteractModel<float>*>> refs;
    for (std::size_t m = 0; m < models.size(); ++m) refs.emplace_back(names[m], models[m].get());
    const ErrorTrace trace = error_trace(refs, splits.test[i]);
    write_trace_csv(out_dir / ("trace_" + trace.episode_id + ".csv"), trace, hash);
    if (e.at("svg").get<bool>()) {
      std::ofstream svg(out_dir / ("trace_" + trace.episode_id + ".svg"));
      svg << render_trace_svg(trace);
    }
  }
  if (e.at("svg").get<bool>()) {
    std::ofstream svg(out_dir / "metrics.svg");
    svg << render_metrics_svg(tables);
  }

  finish_manifest(manifest, out_dir, started);
  std::cout << "evaluated " << test_windows.size() << " test windows with " << models.size()
            << " model(s); results in " << out_dir.string() << "\n";
  return 0;
}

int run_predict(const json& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const fs::path window_path = require_path(cfg, "predict", "window");
  const fs::path checkpoint_path = require_path(cfg, "predict", "checkpoint");
  const fs::path out_path = require_path(cfg, "predict", "out");

  RunManifest manifest =
      start_manifest("predict", cfg.dump(1), cfg.at("seed").get<std::uint64_t>(),
                     {window_path, checkpoint_path}, {out_path.string()});
  const fs::path run_dir =
      out_path.parent_path().empty() ? fs::path(".") : out_path.parent_path();
  fs::create_directories(run_dir);
  manifest.write(run_dir / "run_manifest.json");

  const auto [window, has_action] = scene_window_from_json(read_text_file(window_path),
                                                           window_path.string());
  LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
  const PoseTrajectory forecast = loaded.model->predict_intent(window, has_action);

  json doc;
  doc["manifest_hash"] = manifest.hash();
  doc["variant"] = to_string(loaded.config.variant);
  json rows = json::array();
  for (int t = 0; t < forecast.length(); ++t) {
    json row = json::array();
    for (int c = 0; c < forecast.frames.cols(); ++c) row.push_back(forecast.frames(t, c));
    rows.push_back(std::move(row));
  }
  doc["forecast"] = std::move(rows);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write forecast to " + out_path.string());
  out << doc.dump(1) << "\n";

  finish_manifest(manifest, run_dir, started);
  std::cout << "forecast written to " << out_path.string() << "\n";
  return 0;
}

int run_retarget(const json& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const fs::path episode_path = require_path(cfg, "retarget", "episode");
  const fs::path out_episode = require_path(cfg, "retarget", "out_episode");
  const fs::path out_pairs = require_path(cfg, "retarget", "out_pairs");
  const json& r = cfg.at("retarget");

  RunManifest manifest =
      start_manifest("retarget", cfg.dump(1), cfg.at("seed").get<std::uint64_t>(),
                     {episode_path}, {out_episode.string(), out_pairs.string()});
  const fs::path run_dir =
      out_episode.parent_path().empty() ? fs::path(".") : out_episode.parent_path();
  fs::create_directories(run_dir);
  manifest.write(run_dir / "run_manifest.json");

  const std::string side_text = r.at("side").get<std::string>();
  if (side_text != "left" && side_text != "right") {
    throw ConfigError("retarget.side must be 'left' or 'right'");
  }
  const ArmSide side = side_text == "left" ? ArmSide::Left : ArmSide::Right;

  const Episode ep = load_episode(episode_path);
  const Episode teleop = make_teleop_episode(ep, r.at("agent_index").get<int>(), side);
  save_episode(teleop, out_episode);
  save_paired_set(build_paired_set(teleop), out_pairs);

  finish_manifest(manifest, run_dir, started);
  std::cout << "teleop episode " << out_episode.string() << " and paired set "
            << out_pairs.string() << " written\n";
  return 0;
}

int run_verify(const json& cfg) {
  const int windows = cfg.at("verify").at("windows").get<int>();
  std::vector<VerifyResult> results;
  for (auto& r : verify_gradients()) results.push_back(std::move(r));
  for (auto& r : verify_dct()) results.push_back(std::move(r));
  for (auto& r : verify_translation_equivariance(windows)) results.push_back(std::move(r));
  for (auto& r : verify_variant_contracts(windows)) results.push_back(std::move(r));

  bool all_pass = true;
  double max_grad_err = 0.0;
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    if (r.name.rfind("grad/", 0) == 0) max_grad_err = std::max(max_grad_err, r.value);
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  value=" << r.value
              << "  threshold=" << r.threshold << "\n";
  }
  std::cout << "max grad-check relative error: " << max_grad_err << "\n";
  std::cout << (all_pass ? "verification passed" : "verification FAILED") << "\n";
  return all_pass ? 0 : 1;
}

int execute(const std::string& command, const json& cfg) {
  if (command == "synth") return run_synth(cfg);
  if (command == "pretrain") return run_training(cfg, TrainStage::Pretrain);
  if (command == "finetune") return run_training(cfg, TrainStage::Finetune);
  if (command == "eval") return run_eval(cfg);
  if (command == "predict") return run_predict(cfg);
  if (command == "retarget") return run_retarget(cfg);
  if (command == "verify") return run_verify(cfg);
  throw std::logic_error("unhandled command " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"action-conditioned human intent forecasting pipeline"};
  app.require_subcommand(1);

  struct SubArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    bool align = false;
  };
  std::map<std::string, SubArgs> args;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "generate synthetic episode datasets"},
      {"pretrain", "train on the human-human stage"},
      {"finetune", "fine-tune a pre-trained checkpoint on human-robot data"},
      {"eval", "evaluate checkpoints on the test split"},
      {"predict", "forecast one window file"},
      {"retarget", "derive a robot trajectory and paired set from a human episode"},
      {"verify", "run numerical self-checks"}};
  for (const auto& [name, desc] : commands) {
    auto* sub = app.add_subcommand(name, desc);
    auto& a = args[name];
    sub->add_option("--config,-c", a.config_path, "JSON config file");
    sub->add_option("overrides", a.overrides, "key.path=value overrides");
    if (name == "finetune") {
      sub->add_flag("--align", a.align, "enable the representation alignment terms");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  SubArgs& a = args[command];
  if (a.align) a.overrides.push_back("train.align=true");

  try {
    std::optional<std::uint64_t> env_seed;
    if (const char* env = std::getenv("INTERACT_SEED")) {
      try {
        env_seed = std::stoull(env);
      } catch (const std::exception&) {
        throw ConfigError("INTERACT_SEED is not a valid unsigned integer");
      }
    }
    std::string file_text;
    if (!a.config_path.empty()) file_text = read_text_file(a.config_path);
    const std::string resolved = resolve_config(file_text, a.overrides, env_seed);
    return execute(command, json::parse(resolved));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
