#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "interact/episode.hpp"
#include "interact/losses.hpp"
#include "interact/model.hpp"
#include "interact/optim.hpp"
#include "interact/synth.hpp"

namespace interact {

enum class TrainStage { Pretrain, Finetune };

std::string to_string(TrainStage stage);
TrainStage train_stage_from_string(const std::string& s);

/// Stage configuration. epochs/batch_size/base_lr left negative pick the
/// stage defaults: 50 epochs, batch 256, lr 3e-4 for pre-training and
/// 30 epochs, batch 64, lr 1e-4 for fine-tuning.
struct TrainConfig {
  TrainStage stage = TrainStage::Pretrain;
  int epochs = -1;
  int batch_size = -1;
  double base_lr = -1.0;
  std::vector<int> milestones = {15, 25, 35, 40};
  double gamma = 0.1;
  LossWeights weights;
  double weight_decay = 1e-5;
  std::uint64_t seed = 0;
  bool align_enabled = false;
  std::optional<PairedPoseDataset> paired_set;
  int window_stride = 5;
  int align_pairs_per_batch = 256;

  TrainConfig resolved() const;
  void validate() const;  // align_enabled requires a paired set and the finetune stage
};

struct EpochMetrics {
  int epoch = 0;
  TrainStage stage = TrainStage::Pretrain;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_fde = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  int best_epoch = -1;
  double best_val_fde = 0.0;
  std::string rng_state;                  // trainer RNG after the last epoch
  OptimizerState<float> best_optimizer;   // moments at the best epoch
};

/// Appends metric rows as `epoch,stage,train_loss,val_loss,val_fde,lr`;
/// writes the header only when the file is new or empty.
void append_metrics_csv(const std::filesystem::path& path,
                        const std::vector<EpochMetrics>& rows,
                        const std::string& manifest_hash = "");

/// Runs one training stage over the split episodes: seeded shuffling, batched
/// forward/backward of the combined loss, Adam with the multi-step schedule,
/// per-epoch validation loss and FDE. The model is left holding the
/// parameters of the best-validation-FDE epoch.
///
/// During fine-tuning the partner stream of the windows is the robot track,
/// which routes through the robot embedding layers automatically; all other
/// weights carry over unchanged.
TrainResult run_stage(InteractModel<float>& model, const EpisodeSplits& splits,
                      const TrainConfig& cfg,
                      const std::filesystem::path& metrics_csv = {},
                      const std::string& manifest_hash = "");

/// Mean FDE of the model over prepared windows (no parameter mutation).
double mean_window_fde(const InteractModel<float>& model,
                       const std::vector<TrainingWindow>& windows);

}  // namespace interact
