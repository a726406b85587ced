#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace interact {

/// Configuration problems map to exit code 2 at the CLI boundary.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Canonical defaults for every known config key (serialized JSON). Values of
/// -1 in train.epochs/batch_size/base_lr mean "pick the stage default".
std::string default_config_json();

/// Merges defaults <- optional INTERACT_SEED fallback <- config file <-
/// dotted-key overrides ("train.lambda_h=0.2"), validating every key and type
/// against the defaults and materializing stage-dependent values. Returns the
/// canonical JSON dump of the resolved config. Unknown keys, type mismatches,
/// and malformed overrides throw ConfigError naming the key path.
std::string resolve_config(const std::string& config_file_text,
                           const std::vector<std::string>& overrides,
                           std::optional<std::uint64_t> env_seed);

/// Parsed command line: subcommand, optional config path, raw overrides.
struct CommandSpec {
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
};

/// Reproducibility record written to the run directory before any long
/// computation starts. The hash covers the resolved config, the seed, and the
/// input hashes — not the wall clock — so reruns of the same setup agree.
struct RunManifest {
  std::string command;
  std::string resolved_config_json;
  std::uint64_t seed = 0;
  std::string build_id;
  std::map<std::string, std::string> input_hashes;  // path -> fnv1a64 hex
  std::vector<std::string> output_paths;
  std::string started_at;  // wall clock, informational only
  double wall_clock_seconds = 0.0;

  std::string hash() const;
  void write(const std::filesystem::path& path) const;
};

std::string build_identifier();

/// Collects a manifest for a command about to run: hashes the listed input
/// files and stamps the wall clock.
RunManifest start_manifest(const std::string& command, const std::string& resolved_config,
                           std::uint64_t seed,
                           const std::vector<std::filesystem::path>& inputs,
                           const std::vector<std::string>& planned_outputs);

}  // namespace interact
