#include "interact/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace interact {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void emit_manifest_comment(std::ofstream& out, const std::string& hash) {
  if (!hash.empty()) out << "# manifest=" << hash << "\n";
}

}  // namespace

Predictor predictor_of(const InteractModel<float>& model) {
  return [&model](const SceneWindow& window) { return model.predict_intent(window); };
}

std::vector<WindowScore> score_windows(const Predictor& predict,
                                       const std::vector<TrainingWindow>& windows) {
  std::vector<WindowScore> scores;
  scores.reserve(windows.size());
  for (const auto& w : windows) {
    if (!w.scene.target_future) {
      throw std::invalid_argument("cannot score a window without a target (episode '" +
                                  w.episode_id + "')");
    }
    WindowScore s;
    s.episode_id = w.episode_id;
    s.task = w.task;
    s.start_frame = w.start_frame;
    s.fde = fde(predict(w.scene), *w.scene.target_future);
    scores.push_back(std::move(s));
  }
  return scores;
}

std::vector<WindowScore> score_windows(const InteractModel<float>& model,
                                       const std::vector<TrainingWindow>& windows) {
  return score_windows(predictor_of(model), windows);
}

MetricsTable aggregate_scores(const std::vector<WindowScore>& scores,
                              const std::string& variant_label) {
  if (scores.empty()) throw std::invalid_argument("aggregate_scores: no scores");

  std::map<std::string, std::vector<const WindowScore*>> by_task;
  for (const auto& s : scores) by_task[s.task].push_back(&s);

  MetricsTable table;
  for (const auto& [task, task_scores] : by_task) {
    MetricsRow row;
    row.variant = variant_label;
    row.task = task;
    row.n_windows = static_cast<int>(task_scores.size());

    std::map<std::string, std::pair<double, int>> per_episode;  // sum, count
    double sum = 0.0;
    for (const auto* s : task_scores) {
      sum += s->fde;
      auto& acc = per_episode[s->episode_id];
      acc.first += s->fde;
      acc.second += 1;
    }
    row.mean_fde = sum / row.n_windows;
    row.n_episodes = static_cast<int>(per_episode.size());

    std::vector<double> episode_means;
    for (const auto& [id, acc] : per_episode) episode_means.push_back(acc.first / acc.second);
    if (episode_means.size() > 1) {
      double mean = 0.0;
      for (double m : episode_means) mean += m;
      mean /= episode_means.size();
      double var = 0.0;
      for (double m : episode_means) var += (m - mean) * (m - mean);
      row.std_fde = std::sqrt(var / (episode_means.size() - 1));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

MetricsTable evaluate(const Predictor& predict, const std::vector<TrainingWindow>& windows,
                      const std::string& variant_label) {
  if (windows.empty()) throw std::invalid_argument("evaluate: empty window list");
  return aggregate_scores(score_windows(predict, windows), variant_label);
}

MetricsTable evaluate(const InteractModel<float>& model,
                      const std::vector<TrainingWindow>& windows,
                      const std::string& variant_label) {
  return evaluate(predictor_of(model), windows, variant_label);
}

ErrorTrace error_trace(const std::vector<std::pair<std::string, Predictor>>& predictors,
                       const Episode& episode) {
  if (predictors.empty()) throw std::invalid_argument("error_trace: no models");
  const std::vector<TrainingWindow> windows = make_windows(episode, /*stride=*/1);

  ErrorTrace trace;
  trace.episode_id = episode.id;
  trace.annotations = episode.events;
  for (const auto& w : windows) trace.start_frames.push_back(w.start_frame);
  for (const auto& [label, predict] : predictors) {
    trace.variants.push_back(label);
    std::vector<double> series;
    series.reserve(windows.size());
    for (const auto& w : windows) {
      series.push_back(fde(predict(w.scene), *w.scene.target_future));
    }
    trace.series.push_back(std::move(series));
  }
  return trace;
}

ErrorTrace error_trace(
    const std::vector<std::pair<std::string, const InteractModel<float>*>>& models,
    const Episode& episode) {
  std::vector<std::pair<std::string, Predictor>> predictors;
  predictors.reserve(models.size());
  for (const auto& [label, model] : models) predictors.emplace_back(label, predictor_of(*model));
  return error_trace(predictors, episode);
}

ComparisonReport compare(const std::vector<MetricsTable>& tables) {
  if (tables.empty()) throw std::invalid_argument("compare: no tables");

  // median mean-FDE per (variant, task) across tables (seed-level medians)
  std::map<std::pair<std::string, std::string>, std::vector<double>> samples;
  std::vector<std::string> variant_order;
  std::set<std::string> tasks_seen;
  for (const auto& table : tables) {
    for (const auto& row : table.rows) {
      samples[{row.variant, row.task}].push_back(row.mean_fde);
      if (std::find(variant_order.begin(), variant_order.end(), row.variant) ==
          variant_order.end()) {
        variant_order.push_back(row.variant);
      }
      tasks_seen.insert(row.task);
    }
  }
  for (const auto& variant : variant_order) {
    for (const auto& task : tasks_seen) {
      if (!samples.count({variant, task})) {
        throw std::invalid_argument("compare: variant '" + variant + "' has no rows for task '" +
                                    task + "'");
      }
    }
  }

  ComparisonReport report;
  for (const auto& task : tasks_seen) {
    for (std::size_t a = 0; a < variant_order.size(); ++a) {
      for (std::size_t b = 0; b < variant_order.size(); ++b) {
        if (a == b) continue;
        ComparisonRow row;
        row.task = task;
        row.variant_a = variant_order[a];
        row.variant_b = variant_order[b];
        row.fde_a = median(samples[{row.variant_a, task}]);
        row.fde_b = median(samples[{row.variant_b, task}]);
        row.delta = row.fde_a - row.fde_b;
        row.pct_improvement = row.fde_a != 0.0 ? 100.0 * row.delta / row.fde_a : 0.0;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsTable>& tables,
                       const std::string& manifest_hash) {
  auto out = open_out(path);
  emit_manifest_comment(out, manifest_hash);
  out << "variant,task,mean_fde,std_fde,n_episodes,n_windows\n";
  for (const auto& table : tables) {
    for (const auto& row : table.rows) {
      out << row.variant << "," << row.task << "," << fmt(row.mean_fde) << ","
          << fmt(row.std_fde) << "," << row.n_episodes << "," << row.n_windows << "\n";
    }
  }
}

void write_raw_scores_csv(const fs::path& path, const std::string& variant,
                          const std::vector<WindowScore>& scores,
                          const std::string& manifest_hash) {
  auto out = open_out(path);
  emit_manifest_comment(out, manifest_hash);
  out << "variant,episode_id,task,start_frame,fde\n";
  for (const auto& s : scores) {
    out << variant << "," << s.episode_id << "," << s.task << "," << s.start_frame << ","
        << fmt(s.fde) << "\n";
  }
}

void write_trace_csv(const fs::path& path, const ErrorTrace& trace,
                     const std::string& manifest_hash) {
  auto out = open_out(path);
  emit_manifest_comment(out, manifest_hash);
  out << "frame,variant,fde,annotation\n";
  const double commit = trace.annotations.count("commit_frame")
                            ? trace.annotations.at("commit_frame")
                            : -1.0;
  for (std::size_t v = 0; v < trace.variants.size(); ++v) {
    for (std::size_t i = 0; i < trace.start_frames.size(); ++i) {
      const int frame = trace.start_frames[i];
      out << frame << "," << trace.variants[v] << "," << fmt(trace.series[v][i]) << ",";
      if (commit >= 0.0 && frame == static_cast<int>(commit)) out << "commit";
      out << "\n";
    }
  }
}

void write_comparison_csv(const fs::path& path, const ComparisonReport& report,
                          const std::string& manifest_hash) {
  auto out = open_out(path);
  emit_manifest_comment(out, manifest_hash);
  out << "task,variant_a,variant_b,fde_a,fde_b,delta,pct_improvement\n";
  for (const auto& row : report.rows) {
    out << row.task << "," << row.variant_a << "," << row.variant_b << "," << fmt(row.fde_a)
        << "," << fmt(row.fde_b) << "," << fmt(row.delta) << "," << fmt(row.pct_improvement)
        << "\n";
  }
}

// ---- SVG ------------------------------------------------------------------

namespace {

constexpr const char* kPalette[] = {"#4c78a8", "#f58518", "#54a24b", "#e45756",
                                    "#72b7b2", "#b279a2"};

std::string svg_header(int w, int h) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os.str();
}

}  // namespace

std::string render_metrics_svg(const std::vector<MetricsTable>& tables) {
  struct Bar {
    std::string label;
    double value;
  };
  std::vector<Bar> bars;
  double max_value = 1e-9;
  for (const auto& table : tables) {
    for (const auto& row : table.rows) {
      bars.push_back({row.variant + " / " + row.task, row.mean_fde});
      max_value = std::max(max_value, row.mean_fde);
    }
  }
  const int bar_h = 22, gap = 8, left = 220, width = 640, top = 30;
  const int height = top + static_cast<int>(bars.size()) * (bar_h + gap) + 20;

  std::ostringstream os;
  os << svg_header(width, height);
  os << "<text x=\"10\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">mean FDE (m)"
     << "</text>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const int y = top + static_cast<int>(i) * (bar_h + gap);
    const double frac = bars[i].value / max_value;
    const int w = static_cast<int>(frac * (width - left - 70));
    os << "<text x=\"" << left - 8 << "\" y=\"" << y + bar_h - 6
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << bars[i].label << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << y << "\" width=\"" << std::max(w, 1)
       << "\" height=\"" << bar_h << "\" fill=\"" << kPalette[i % 6] << "\"/>\n";
    os << "<text x=\"" << left + std::max(w, 1) + 6 << "\" y=\"" << y + bar_h - 6
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(bars[i].value)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_trace_svg(const ErrorTrace& trace) {
  const int width = 760, height = 360, left = 50, bottom = 40, top = 20, right = 140;
  const int plot_w = width - left - right, plot_h = height - top - bottom;

  double max_fde = 1e-9;
  for (const auto& series : trace.series) {
    for (double v : series) max_fde = std::max(max_fde, v);
  }
  const int n = static_cast<int>(trace.start_frames.size());
  auto x_of = [&](int i) {
    return left + (n <= 1 ? 0.0 : plot_w * static_cast<double>(i) / (n - 1));
  };
  auto y_of = [&](double v) { return top + plot_h * (1.0 - v / max_fde); };

  std::ostringstream os;
  os << svg_header(width, height);
  os << "<text x=\"10\" y=\"14\" font-family=\"sans-serif\" font-size=\"12\">FDE over time, "
     << trace.episode_id << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
     << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
     << top + plot_h << "\" stroke=\"black\"/>\n";

  if (trace.annotations.count("commit_frame") && n > 1) {
    const double commit = trace.annotations.at("commit_frame");
    const double span = trace.start_frames.back() - trace.start_frames.front();
    if (span > 0 && commit >= trace.start_frames.front() && commit <= trace.start_frames.back()) {
      const double x = left + plot_w * (commit - trace.start_frames.front()) / span;
      os << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\""
         << top + plot_h << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
      os << "<text x=\"" << x + 4 << "\" y=\"" << top + 12
         << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#666\">commit</text>\n";
    }
  }

  for (std::size_t v = 0; v < trace.series.size(); ++v) {
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[v % 6] << "\" stroke-width=\"1.5\" points=\"";
    for (int i = 0; i < n; ++i) {
      os << x_of(i) << "," << y_of(trace.series[v][i]) << " ";
    }
    os << "\"/>\n";
    os << "<text x=\"" << left + plot_w + 10 << "\" y=\"" << top + 14 + 16 * v
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << kPalette[v % 6] << "\">"
       << trace.variants[v] << "</text>\n";
  }
  os << "<text x=\"" << left << "\" y=\"" << height - 8
     << "\" font-family=\"sans-serif\" font-size=\"10\">window start frame</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace interact
