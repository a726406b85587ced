#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "interact/model.hpp"
#include "interact/optim.hpp"

namespace interact {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointVersionError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointCorruptError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointShapeError : CheckpointError {
  using CheckpointError::CheckpointError;
};

/// A restored training state: the model rebuilt from the stored config with
/// all parameters loaded, plus whatever optimizer/RNG state was saved with it.
struct LoadedCheckpoint {
  ModelConfig config;
  int epoch = 0;
  std::string rng_state;
  std::string config_hash;
  std::unique_ptr<InteractModel<float>> model;
  std::optional<OptimizerState<float>> optimizer;
};

/// Versioned binary container: magic, version, config JSON block, a name/shape
/// directory of little-endian float32 parameter blobs, optional optimizer
/// moments, and the trainer RNG state.
void save_checkpoint(const std::filesystem::path& path, const InteractModel<float>& model,
                     const OptimizerState<float>* optimizer = nullptr, int epoch = 0,
                     const std::string& rng_state = "");

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Loads parameter values into an existing model; every stored tensor must
/// match a registered parameter in name and shape (CheckpointShapeError names
/// the first offender).
void restore_checkpoint(const std::filesystem::path& path, InteractModel<float>& model);

}  // namespace interact
