#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "interact/episode.hpp"
#include "interact/model.hpp"

namespace interact {

/// One scored window; the raw material every aggregate is derived from.
struct WindowScore {
  std::string episode_id;
  std::string task;
  int start_frame = 0;
  double fde = 0.0;
};

struct MetricsRow {
  std::string variant;
  std::string task;
  double mean_fde = 0.0;  // window-weighted
  double std_fde = 0.0;   // across per-episode means
  int n_episodes = 0;
  int n_windows = 0;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
  std::string seed_label;  // optional provenance for seed-level medians
};

/// Anything that maps a scene window to a forecast; lets the harness score
/// reference predictors (ground truth, constant offsets) alongside real models.
using Predictor = std::function<PoseTrajectory(const SceneWindow&)>;

Predictor predictor_of(const InteractModel<float>& model);

/// Scores every window with the predictor; windows must carry targets.
std::vector<WindowScore> score_windows(const Predictor& predict,
                                       const std::vector<TrainingWindow>& windows);
std::vector<WindowScore> score_windows(const InteractModel<float>& model,
                                       const std::vector<TrainingWindow>& windows);

/// Groups scores by task: window-weighted mean FDE, standard deviation across
/// per-episode means, and both counts.
MetricsTable aggregate_scores(const std::vector<WindowScore>& scores,
                              const std::string& variant_label);

/// score + aggregate in one step; errors on an empty window list.
MetricsTable evaluate(const Predictor& predict, const std::vector<TrainingWindow>& windows,
                      const std::string& variant_label);
MetricsTable evaluate(const InteractModel<float>& model,
                      const std::vector<TrainingWindow>& windows,
                      const std::string& variant_label);

/// Per-start-frame FDE series of several variants over one episode, windows
/// slid at stride 1. Event annotations (commit frame, onset) come from the
/// episode metadata when present.
struct ErrorTrace {
  std::string episode_id;
  std::vector<int> start_frames;
  std::vector<std::string> variants;
  std::vector<std::vector<double>> series;  // series[v][i] aligned with start_frames
  std::map<std::string, double> annotations;
};

ErrorTrace error_trace(const std::vector<std::pair<std::string, Predictor>>& predictors,
                       const Episode& episode);
ErrorTrace error_trace(
    const std::vector<std::pair<std::string, const InteractModel<float>*>>& models,
    const Episode& episode);

struct ComparisonRow {
  std::string task;
  std::string variant_a;
  std::string variant_b;
  double fde_a = 0.0;  // seed-median mean FDE
  double fde_b = 0.0;
  double delta = 0.0;            // fde_a - fde_b
  double pct_improvement = 0.0;  // 100 * delta / fde_a
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
};

/// Merges tables (multiple variants, possibly multiple seeds per variant),
/// takes seed-level medians per (variant, task), and reports all ordered
/// variant deltas per task. Tables must agree on the task set.
ComparisonReport compare(const std::vector<MetricsTable>& tables);

// ---- artifacts --------------------------------------------------------

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsTable>& tables,
                       const std::string& manifest_hash = "");
void write_raw_scores_csv(const std::filesystem::path& path, const std::string& variant,
                          const std::vector<WindowScore>& scores,
                          const std::string& manifest_hash = "");
void write_trace_csv(const std::filesystem::path& path, const ErrorTrace& trace,
                     const std::string& manifest_hash = "");
void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& report,
                          const std::string& manifest_hash = "");

/// Static SVG artifacts mirroring the usual FDE bar/line figures.
std::string render_metrics_svg(const std::vector<MetricsTable>& tables);
std::string render_trace_svg(const ErrorTrace& trace);

}  // namespace interact
