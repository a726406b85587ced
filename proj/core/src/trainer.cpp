#include "interact/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "interact/rng.hpp"

namespace interact {

namespace fs = std::filesystem;

std::string to_string(TrainStage stage) {
  return stage == TrainStage::Pretrain ? "pretrain" : "finetune";
}

TrainStage train_stage_from_string(const std::string& s) {
  if (s == "pretrain") return TrainStage::Pretrain;
  if (s == "finetune") return TrainStage::Finetune;
  throw std::invalid_argument("unknown training stage '" + s + "'");
}

TrainConfig TrainConfig::resolved() const {
  TrainConfig out = *this;
  const bool pre = stage == TrainStage::Pretrain;
  if (out.epochs < 0) out.epochs = pre ? 50 : 30;
  if (out.batch_size < 0) out.batch_size = pre ? 256 : 64;
  if (out.base_lr < 0.0) out.base_lr = pre ? 3e-4 : 1e-4;
  return out;
}

void TrainConfig::validate() const {
  weights.validate();
  if (align_enabled) {
    if (!paired_set || paired_set->size() == 0) {
      throw std::invalid_argument("alignment requires a non-empty paired pose set");
    }
    if (stage != TrainStage::Finetune) {
      throw std::invalid_argument("alignment is a fine-tuning option");
    }
  }
  if (window_stride < 1) throw std::invalid_argument("window stride must be >= 1");
  if (align_pairs_per_batch < 1) {
    throw std::invalid_argument("align_pairs_per_batch must be >= 1");
  }
}

namespace {

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

using Matrixf = Tensor<float>::Matrix;

double centered_window_fde(const Matrixf& pred, const Matrixf& target) {
  const int last = static_cast<int>(pred.rows()) - 1;
  const int joints = static_cast<int>(pred.cols()) / 3;
  double sum = 0.0;
  for (int j = 0; j < joints; ++j) {
    const Eigen::Vector3f d = pred.row(last).segment<3>(3 * j).transpose() -
                              target.row(last).segment<3>(3 * j).transpose();
    sum += d.norm();
  }
  return sum / joints;
}

std::vector<ModelInput<float>> prepare_inputs(const std::vector<TrainingWindow>& windows) {
  std::vector<ModelInput<float>> inputs;
  inputs.reserve(windows.size());
  for (const auto& w : windows) {
    if (!w.scene.target_future) {
      throw std::invalid_argument("training window from episode '" + w.episode_id +
                                  "' has no target future");
    }
    inputs.push_back(make_model_input<float>(w.scene));
  }
  return inputs;
}

std::vector<TrainingWindow> collect_windows(const std::vector<Episode>& episodes, int stride) {
  std::vector<TrainingWindow> out;
  for (const auto& ep : episodes) {
    auto windows = make_windows(ep, stride);
    out.insert(out.end(), std::make_move_iterator(windows.begin()),
               std::make_move_iterator(windows.end()));
  }
  return out;
}

// Without-replacement subsample of pair rows for one batch's alignment terms.
std::pair<Matrixf, Matrixf> sample_pairs(const PairedPoseDataset& set, int count, Rng& rng) {
  const int total = set.size();
  std::vector<int> picks;
  if (total <= count) {
    picks.resize(total);
    for (int i = 0; i < total; ++i) picks[i] = i;
  } else {
    std::vector<int> order(total);
    for (int i = 0; i < total; ++i) order[i] = i;
    for (int i = 0; i < count; ++i) {
      const int j = i + static_cast<int>(rng.next_below(total - i));
      std::swap(order[i], order[j]);
    }
    picks.assign(order.begin(), order.begin() + count);
  }
  Matrixf robot(picks.size(), 6), human(picks.size(), 27);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    robot.row(i) = set.robot_poses.row(picks[i]).cast<float>();
    human.row(i) = set.human_poses.row(picks[i]).cast<float>();
  }
  return {std::move(robot), std::move(human)};
}

std::vector<Matrixf> snapshot_params(const InteractModel<float>& model) {
  std::vector<Matrixf> out;
  for (const auto& p : model.params().all()) out.push_back(p->value);
  return out;
}

void restore_params(InteractModel<float>& model, const std::vector<Matrixf>& snapshot) {
  const auto& params = model.params().all();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snapshot[i];
}

}  // namespace

void append_metrics_csv(const fs::path& path, const std::vector<EpochMetrics>& rows,
                        const std::string& manifest_hash) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append metrics to " + path.string());
  if (fresh) {
    if (!manifest_hash.empty()) out << "# manifest=" << manifest_hash << "\n";
    out << "epoch,stage,train_loss,val_loss,val_fde,lr\n";
  }
  for (const auto& r : rows) {
    out << r.epoch << "," << to_string(r.stage) << "," << format_metric(r.train_loss) << ","
        << format_metric(r.val_loss) << "," << format_metric(r.val_fde) << ","
        << format_metric(r.lr) << "\n";
  }
}

double mean_window_fde(const InteractModel<float>& model,
                       const std::vector<TrainingWindow>& windows) {
  if (windows.empty()) throw std::invalid_argument("mean_window_fde: no windows");
  double sum = 0.0;
  for (const auto& w : windows) {
    if (!w.scene.target_future) {
      throw std::invalid_argument("window without target future cannot be scored");
    }
    sum += fde(model.predict_intent(w.scene), *w.scene.target_future);
  }
  return sum / static_cast<double>(windows.size());
}

TrainResult run_stage(InteractModel<float>& model, const EpisodeSplits& splits,
                      const TrainConfig& raw_cfg, const fs::path& metrics_csv,
                      const std::string& manifest_hash) {
  const TrainConfig cfg = raw_cfg.resolved();
  cfg.validate();

  const std::vector<TrainingWindow> train_windows =
      collect_windows(splits.train, cfg.window_stride);
  const std::vector<TrainingWindow> val_windows = collect_windows(splits.val, cfg.window_stride);
  if (train_windows.empty()) {
    throw std::invalid_argument("training split produced no windows");
  }
  if (val_windows.empty()) {
    throw std::invalid_argument("validation split produced no windows");
  }

  const std::vector<ModelInput<float>> train_inputs = prepare_inputs(train_windows);
  const std::vector<ModelInput<float>> val_inputs = prepare_inputs(val_windows);

  LRSchedule schedule{cfg.base_lr, cfg.milestones, cfg.gamma};
  OptimizerState<float> opt;
  opt.config.weight_decay = cfg.weight_decay;
  opt.init(model.params());

  Rng rng(cfg.seed);
  std::vector<int> order(train_inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  TrainResult result;
  std::vector<Matrixf> best;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(schedule, epoch);
    rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const std::size_t batch_end = std::min(order.size(), at + cfg.batch_size);
      const int batch_n = static_cast<int>(batch_end - at);

      Tape<float> tape;
      TensorPtr<float> pred_sum;
      for (std::size_t b = at; b < batch_end; ++b) {
        const ModelInput<float>& in = train_inputs[order[b]];
        auto pred = model.forward(tape, in);
        auto window_loss = mpjpe_loss(tape, pred, in.target);
        pred_sum = pred_sum ? tape.add(pred_sum, window_loss) : window_loss;
      }
      auto pred_loss = tape.scale(pred_sum, 1.0f / batch_n);

      TensorPtr<float> hist_align, fut_align;
      if (cfg.align_enabled) {
        auto [robot, human] = sample_pairs(*cfg.paired_set, cfg.align_pairs_per_batch, rng);
        hist_align = alignment_loss(tape, model, robot, human, AlignWhich::Hist);
        fut_align = alignment_loss(tape, model, robot, human, AlignWhich::Fut);
      }
      auto total = weighted_total_loss(tape, pred_loss, hist_align, fut_align, cfg.weights);

      model.params().zero_grad();
      tape.backward(total);
      adam_step(model.params(), opt, lr);
      loss_sum += static_cast<double>(total->value(0, 0)) * batch_n;
    }

    double val_loss_sum = 0.0;
    double val_fde_sum = 0.0;
    for (const auto& in : val_inputs) {
      Tape<float> tape(/*grad_enabled=*/false);
      auto pred = model.forward(tape, in);
      val_loss_sum += static_cast<double>(mpjpe_loss(tape, pred, in.target)->value(0, 0));
      val_fde_sum += centered_window_fde(pred->value, in.target);
    }

    EpochMetrics row;
    row.epoch = epoch;
    row.stage = cfg.stage;
    row.train_loss = loss_sum / static_cast<double>(train_inputs.size());
    row.val_loss = val_loss_sum / static_cast<double>(val_inputs.size());
    row.val_fde = val_fde_sum / static_cast<double>(val_inputs.size());
    row.lr = lr;
    if (!std::isfinite(row.val_fde)) {
      throw std::runtime_error("validation FDE is not finite at epoch " + std::to_string(epoch));
    }
    result.history.push_back(row);

    if (result.best_epoch < 0 || row.val_fde < result.best_val_fde) {
      result.best_epoch = epoch;
      result.best_val_fde = row.val_fde;
      best = snapshot_params(model);
      result.best_optimizer = opt;
    }
  }

  if (!best.empty()) restore_params(model, best);
  result.rng_state = rng.state();
  if (!metrics_csv.empty()) append_metrics_csv(metrics_csv, result.history, manifest_hash);
  return result;
}

}  // namespace interact
