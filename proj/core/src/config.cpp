#include "interact/config.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <json.hpp>

#include "interact/util.hpp"

namespace interact {

using nlohmann::json;

namespace {

json defaults() {
  json cfg;
  cfg["seed"] = 0;
  cfg["run_dir"] = "run";

  cfg["data"] = {{"dir", ""}, {"window_stride", 5}, {"split_train", 8}, {"split_val", 1},
                 {"split_test", 1}};

  cfg["synth"] = {{"task", "conflict_reach"},
                  {"n_episodes", 120},
                  {"partner", "human"},
                  {"min_separation", 0.2},
                  {"workspace_radius", 1.0},
                  {"yaw_range", 3.141592653589793},
                  {"objects", json::array({json::array({0.45, -0.35, 0.95}),
                                           json::array({0.45, 0.35, 0.95})})},
                  {"sources", json::array()},
                  {"out_dir", ""}};

  cfg["model"] = {{"embed_dim", 32}, {"layers", 3},          {"heads", 4},
                  {"horizon", 15},   {"variant", "InteRACT"}};

  cfg["train"] = {{"stage", "pretrain"},
                  {"epochs", -1},
                  {"batch_size", -1},
                  {"base_lr", -1.0},
                  {"milestones", json::array({15, 25, 35, 40})},
                  {"gamma", 0.1},
                  {"lambda_p", 1.0},
                  {"lambda_h", 0.1},
                  {"lambda_f", 0.1},
                  {"weight_decay", 1e-5},
                  {"align", false},
                  {"align_pairs_per_batch", 256},
                  {"paired_set", ""},
                  {"checkpoint_in", ""},
                  {"checkpoint_out", ""},
                  {"metrics_csv", ""}};

  cfg["eval"] = {{"checkpoints", json::array()},
                 {"labels", json::array()},
                 {"out_dir", ""},
                 {"dump_raw", false},
                 {"traces", 1},
                 {"svg", false}};

  cfg["predict"] = {{"window", ""}, {"checkpoint", ""}, {"out", ""}};

  cfg["retarget"] = {{"episode", ""},      {"agent_index", 0}, {"side", "right"},
                     {"out_episode", ""},  {"out_pairs", ""}};

  cfg["verify"] = {{"windows", 100}};
  return cfg;
}

bool types_compatible(const json& expected, const json& actual) {
  if (expected.is_number() && actual.is_number()) return true;
  if (expected.is_string() && actual.is_string()) return true;
  if (expected.is_boolean() && actual.is_boolean()) return true;
  if (expected.is_array() && actual.is_array()) return true;
  if (expected.is_object() && actual.is_object()) return true;
  return false;
}

void merge_checked(json& base, const json& incoming, const std::string& prefix) {
  for (const auto& [key, value] : incoming.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) {
      throw ConfigError("unknown config key '" + path + "'");
    }
    json& slot = base[key];
    if (slot.is_object()) {
      if (!value.is_object()) {
        throw ConfigError("config key '" + path + "' must be an object");
      }
      merge_checked(slot, value, path);
      continue;
    }
    if (!types_compatible(slot, value)) {
      throw ConfigError("config key '" + path + "' has the wrong type (expected " +
                        std::string(slot.type_name()) + ", got " +
                        std::string(value.type_name()) + ")");
    }
    slot = value;
  }
}

void apply_override(json& base, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + text + "' is not of the form key.path=value");
  }
  const std::string path = text.substr(0, eq);
  const std::string value_text = text.substr(eq + 1);

  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::parse_error&) {
    value = value_text;  // bare strings allowed without quotes
  }

  // build a nested single-key object and reuse the checked merge
  std::vector<std::string> parts;
  std::size_t at = 0;
  while (true) {
    const auto dot = path.find('.', at);
    if (dot == std::string::npos) {
      parts.push_back(path.substr(at));
      break;
    }
    parts.push_back(path.substr(at, dot - at));
    at = dot + 1;
  }
  json nested = value;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    nested = json{{*it, std::move(nested)}};
  }
  merge_checked(base, nested, "");
}

void materialize_stage_defaults(json& cfg) {
  json& train = cfg["train"];
  const std::string stage = train.at("stage").get<std::string>();
  if (stage != "pretrain" && stage != "finetune") {
    throw ConfigError("config key 'train.stage' must be 'pretrain' or 'finetune'");
  }
  const bool pre = stage == "pretrain";
  if (train.at("epochs").get<int>() < 0) train["epochs"] = pre ? 50 : 30;
  if (train.at("batch_size").get<int>() < 0) train["batch_size"] = pre ? 256 : 64;
  if (train.at("base_lr").get<double>() < 0.0) train["base_lr"] = pre ? 3e-4 : 1e-4;
}

void sanity_check(const json& cfg) {
  auto positive = [&](const char* path, double v) {
    if (v <= 0.0) throw ConfigError(std::string("config key '") + path + "' must be positive");
  };
  positive("train.epochs", cfg["train"]["epochs"].get<double>());
  positive("train.batch_size", cfg["train"]["batch_size"].get<double>());
  positive("train.base_lr", cfg["train"]["base_lr"].get<double>());
  positive("model.embed_dim", cfg["model"]["embed_dim"].get<double>());
  positive("data.window_stride", cfg["data"]["window_stride"].get<double>());
  for (const char* key : {"lambda_p", "lambda_h", "lambda_f"}) {
    if (cfg["train"][key].get<double>() < 0.0) {
      throw ConfigError("config key 'train." + std::string(key) + "' must be nonnegative");
    }
  }
  if (cfg["seed"].get<double>() < 0.0) {
    throw ConfigError("config key 'seed' must be nonnegative");
  }
}

}  // namespace

std::string default_config_json() { return defaults().dump(1); }

std::string resolve_config(const std::string& config_file_text,
                           const std::vector<std::string>& overrides,
                           std::optional<std::uint64_t> env_seed) {
  json cfg = defaults();
  if (env_seed) cfg["seed"] = *env_seed;

  if (!config_file_text.empty()) {
    json file;
    try {
      file = json::parse(config_file_text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
    merge_checked(cfg, file, "");
  }
  for (const auto& text : overrides) apply_override(cfg, text);

  materialize_stage_defaults(cfg);
  sanity_check(cfg);
  return cfg.dump(1);
}

std::string build_identifier() {
  return std::string("interact-0.1.0 gcc-") + __VERSION__;
}

std::string RunManifest::hash() const {
  json hashed;
  hashed["command"] = command;
  hashed["config"] = json::parse(resolved_config_json);
  hashed["seed"] = seed;
  hashed["inputs"] = input_hashes;
  return to_hex(fnv1a64(hashed.dump()));
}

void RunManifest::write(const std::filesystem::path& path) const {
  json doc;
  doc["command"] = command;
  doc["config"] = json::parse(resolved_config_json);
  doc["seed"] = seed;
  doc["build"] = build_id;
  doc["inputs"] = input_hashes;
  doc["outputs"] = output_paths;
  doc["started_at"] = started_at;
  doc["wall_clock_seconds"] = wall_clock_seconds;
  doc["manifest_hash"] = hash();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << doc.dump(1) << "\n";
}

RunManifest start_manifest(const std::string& command, const std::string& resolved_config,
                           std::uint64_t seed,
                           const std::vector<std::filesystem::path>& inputs,
                           const std::vector<std::string>& planned_outputs) {
  RunManifest m;
  m.command = command;
  m.resolved_config_json = resolved_config;
  m.seed = seed;
  m.build_id = build_identifier();
  for (const auto& path : inputs) {
    m.input_hashes[path.string()] = to_hex(hash_file(path));
  }
  m.output_paths = planned_outputs;

  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  m.started_at = buf;
  return m;
}

}  // namespace interact
