#include "interact/verify.hpp"

#include <cmath>

#include "interact/dct.hpp"
#include "interact/episode.hpp"
#include "interact/gradcheck.hpp"
#include "interact/losses.hpp"
#include "interact/model.hpp"
#include "interact/nn.hpp"

namespace interact {

namespace {

using Matrixd = Tensor<double>::Matrix;

Matrixd random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  Matrixd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-scale, scale);
  }
  return m;
}

TensorPtr<double> leaf(Rng& rng, int rows, int cols, const std::string& name,
                       double scale = 1.0) {
  return make_tensor<double>(random_matrix(rng, rows, cols, scale), true, name);
}

VerifyResult from_report(const GradCheckReport& report, double threshold) {
  VerifyResult r;
  r.name = "grad/" + report.op_name;
  r.value = report.max_rel_error;
  r.threshold = threshold;
  r.pass = report.max_rel_error <= threshold;
  return r;
}

}  // namespace

SceneWindow make_random_window(Rng& rng, AgentKind partner_kind, int horizon,
                               bool with_target) {
  const JointLayout& partner_layout =
      partner_kind == AgentKind::Robot ? JointLayout::robot() : JointLayout::human();
  auto traj = [&](const JointLayout& layout) {
    Eigen::MatrixXd frames(horizon, layout.total_dim());
    for (int t = 0; t < horizon; ++t) {
      for (int c = 0; c < layout.total_dim(); ++c) frames(t, c) = rng.uniform(-1.0, 1.0);
    }
    return PoseTrajectory(layout, std::move(frames), kCanonicalHz);
  };
  SceneWindow w;
  w.human_history = traj(JointLayout::human());
  w.partner_history = traj(partner_layout);
  Eigen::VectorXd action(partner_layout.total_dim());
  for (int c = 0; c < action.size(); ++c) action(c) = rng.uniform(-1.0, 1.0);
  w.partner_future_action = Pose(partner_layout, std::move(action));
  if (with_target) w.target_future = traj(JointLayout::human());
  return w;
}

std::vector<VerifyResult> verify_gradients() {
  std::vector<VerifyResult> results;
  Rng rng(20240815);

  {
    auto x = leaf(rng, 3, 5, "x");
    auto w = leaf(rng, 5, 4, "w");
    auto b = leaf(rng, 1, 4, "b");
    results.push_back(from_report(
        grad_check("linear",
                   [&](Tape<double>& t) { return t.sum_all(t.linear(x, w, b)); }, {x, w, b}),
        1e-6));
  }
  {
    auto a = leaf(rng, 4, 3, "a");
    auto b = leaf(rng, 3, 5, "b");
    results.push_back(from_report(
        grad_check("matmul", [&](Tape<double>& t) { return t.sum_all(t.matmul(a, b)); },
                   {a, b}),
        1e-6));
  }
  {
    auto a = leaf(rng, 4, 6, "a");
    auto b = leaf(rng, 5, 6, "b");
    results.push_back(from_report(
        grad_check("matmul_nt", [&](Tape<double>& t) { return t.sum_all(t.matmul_nt(a, b)); },
                   {a, b}),
        1e-6));
  }
  {
    auto a = leaf(rng, 3, 4, "a");
    auto b = leaf(rng, 3, 4, "b");
    results.push_back(from_report(
        grad_check("elementwise",
                   [&](Tape<double>& t) {
                     auto sum = t.add(a, b);
                     auto diff = t.sub(a, b);
                     auto prod = t.mul(sum, diff);
                     return t.sum_all(t.scale(prod, 0.7));
                   },
                   {a, b}),
        1e-6));
  }
  {
    auto x = leaf(rng, 4, 5, "x");
    results.push_back(from_report(
        grad_check("relu",
                   [&](Tape<double>& t) {
                     // square keeps the check away from the kink at zero
                     auto y = t.relu(x);
                     return t.sum_all(t.mul(y, y));
                   },
                   {x}),
        1e-6));
  }
  {
    auto x = leaf(rng, 4, 6, "x");
    auto v = leaf(rng, 4, 6, "v");
    results.push_back(from_report(
        grad_check("softmax_rows",
                   [&](Tape<double>& t) {
                     return t.sum_all(t.mul(t.softmax_rows(x), v));
                   },
                   {x, v}),
        1e-6));
  }
  {
    auto x = leaf(rng, 4, 6, "x");
    auto g = leaf(rng, 1, 6, "gain");
    auto b = leaf(rng, 1, 6, "bias");
    auto v = leaf(rng, 4, 6, "v");
    results.push_back(from_report(
        grad_check("layer_norm",
                   [&](Tape<double>& t) {
                     return t.sum_all(t.mul(t.layer_norm(x, g, b), v));
                   },
                   {x, g, b, v}),
        1e-6));
  }
  {
    auto x = leaf(rng, 3, 8, "x");
    results.push_back(from_report(
        grad_check("shape_ops",
                   [&](Tape<double>& t) {
                     auto left = t.slice_cols(x, 0, 4);
                     auto right = t.slice_cols(x, 4, 4);
                     auto merged = t.concat_cols({right, left});
                     auto stacked = t.concat_rows({merged, merged});
                     auto wide = t.reshape(stacked, 3, 16);
                     return t.sum_all(t.mul(wide, wide));
                   },
                   {x}),
        1e-6));
  }
  {
    auto a = leaf(rng, 5, 7, "a");
    auto b = leaf(rng, 5, 7, "b");
    results.push_back(from_report(
        grad_check("row_cosine",
                   [&](Tape<double>& t) { return t.sum_all(t.row_cosine(a, b)); }, {a, b}),
        1e-6));
  }
  {
    const int heads = 2, dim = 8;
    auto q = leaf(rng, 3, dim, "q");
    auto k = leaf(rng, 5, dim, "k");
    auto v = leaf(rng, 5, dim, "v");
    auto wo = leaf(rng, dim, dim, "wo");
    auto bo = leaf(rng, 1, dim, "bo");
    results.push_back(from_report(
        grad_check("multi_head_attention",
                   [&](Tape<double>& t) {
                     return t.sum_all(multi_head_attention(t, q, k, v, wo, bo, heads));
                   },
                   {q, k, v, wo, bo}),
        1e-5));
  }
  {
    Rng init(7);
    ParameterStore<double> store;
    EncoderLayer<double> layer(store, "enc", 8, 2, init);
    auto x = leaf(rng, 4, 8, "x");
    std::vector<TensorPtr<double>> leaves = store.all();
    leaves.push_back(x);
    results.push_back(from_report(
        grad_check("encoder_layer",
                   [&](Tape<double>& t) {
                     auto y = layer.forward(t, x);
                     return t.sum_all(t.mul(y, y));
                   },
                   leaves),
        1e-4));
  }
  {
    Rng init(8);
    ParameterStore<double> store;
    DecoderLayer<double> layer(store, "dec", 8, 2, init);
    auto q = leaf(rng, 1, 8, "q");
    auto mem = leaf(rng, 6, 8, "mem");
    std::vector<TensorPtr<double>> leaves = store.all();
    leaves.push_back(q);
    leaves.push_back(mem);
    results.push_back(from_report(
        grad_check("decoder_layer",
                   [&](Tape<double>& t) {
                     auto y = layer.forward(t, q, mem);
                     return t.sum_all(t.mul(y, y));
                   },
                   leaves),
        1e-4));
  }
  {
    // Full forward plus the combined loss on a short-horizon scene.
    ModelConfig cfg;
    cfg.horizon = 4;
    cfg.embed_dim = 8;
    cfg.heads = 2;
    cfg.layers = 3;
    cfg.variant = Variant::InteRACTAlign;
    InteractModel<double> model(cfg, /*seed=*/11);

    Rng data_rng(12345);
    SceneWindow window = make_random_window(data_rng, AgentKind::Robot, cfg.horizon);
    const ModelInput<double> input = make_model_input<double>(window);
    const Matrixd robot_pairs = random_matrix(data_rng, 6, 6);
    const Matrixd human_pairs = random_matrix(data_rng, 6, 27);
    const LossWeights weights;

    results.push_back(from_report(
        grad_check("interact_forward_total_loss",
                   [&](Tape<double>& t) {
                     auto pred = model.forward(t, input);
                     auto pred_loss = mpjpe_loss(t, pred, input.target);
                     auto hist = alignment_loss(t, model, robot_pairs, human_pairs,
                                                AlignWhich::Hist);
                     auto fut = alignment_loss(t, model, robot_pairs, human_pairs,
                                               AlignWhich::Fut);
                     return weighted_total_loss(t, pred_loss, hist, fut, weights);
                   },
                   model.params().all()),
        1e-4));
  }
  return results;
}

std::vector<VerifyResult> verify_dct(int channels, int length) {
  Rng rng(99);
  double max_roundtrip = 0.0;
  double max_norm_drift = 0.0;
  for (int c = 0; c < channels; ++c) {
    Eigen::MatrixXd x(length, 1);
    for (int t = 0; t < length; ++t) x(t, 0) = rng.uniform(-2.0, 2.0);
    const Eigen::MatrixXd coeffs = dct_forward(x);
    const Eigen::MatrixXd back = dct_inverse(coeffs);
    max_roundtrip = std::max(max_roundtrip, (back - x).cwiseAbs().maxCoeff());
    max_norm_drift = std::max(max_norm_drift, std::abs(coeffs.norm() - x.norm()));
  }
  VerifyResult roundtrip{"dct/roundtrip_max_abs_err", max_roundtrip, 1e-9,
                         max_roundtrip <= 1e-9};
  VerifyResult norm{"dct/norm_preservation", max_norm_drift, 1e-9, max_norm_drift <= 1e-9};
  return {roundtrip, norm};
}

std::vector<VerifyResult> verify_translation_equivariance(int windows) {
  ModelConfig cfg;
  cfg.embed_dim = 32;
  cfg.heads = 2;
  InteractModel<float> model(cfg, /*seed=*/3);

  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < windows; ++i) {
    const AgentKind partner = (i % 2 == 0) ? AgentKind::Human : AgentKind::Robot;
    const SceneWindow window = make_random_window(rng, partner);
    const Eigen::Vector3d v(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                            rng.uniform(-2.0, 2.0));
    const PoseTrajectory base = model.predict_intent(window);
    const PoseTrajectory shifted = model.predict_intent(translate(window, v));
    const PoseTrajectory expected = translate(base, v);
    worst = std::max(worst, (shifted.frames - expected.frames).cwiseAbs().maxCoeff());
  }
  return {VerifyResult{"model/translation_equivariance_max_abs", worst, 1e-6, worst <= 1e-6}};
}

std::vector<VerifyResult> verify_variant_contracts(int windows) {
  ModelConfig marginal_cfg;
  marginal_cfg.embed_dim = 32;
  marginal_cfg.heads = 2;
  marginal_cfg.variant = Variant::Marginal;
  InteractModel<float> marginal(marginal_cfg, /*seed=*/5);

  ModelConfig hist_cfg = marginal_cfg;
  hist_cfg.variant = Variant::MarginalHist;
  InteractModel<float> marginal_hist(hist_cfg, /*seed=*/5);

  Rng rng(77);
  bool marginal_ok = true;
  bool hist_ok = true;
  for (int i = 0; i < windows; ++i) {
    const AgentKind partner = (i % 2 == 0) ? AgentKind::Human : AgentKind::Robot;
    SceneWindow window = make_random_window(rng, partner);

    SceneWindow perturbed = window;
    for (int t = 0; t < perturbed.partner_history.length(); ++t) {
      for (int c = 0; c < perturbed.partner_history.frames.cols(); ++c) {
        perturbed.partner_history.frames(t, c) += rng.uniform(-0.5, 0.5);
      }
    }
    SceneWindow future_perturbed = window;
    for (int c = 0; c < future_perturbed.partner_future_action.coords.size(); ++c) {
      future_perturbed.partner_future_action.coords(c) += rng.uniform(-0.5, 0.5);
    }

    const Eigen::MatrixXd base_m = marginal.predict_intent(window).frames;
    marginal_ok = marginal_ok && (marginal.predict_intent(perturbed).frames == base_m) &&
                  (marginal.predict_intent(future_perturbed).frames == base_m);

    const Eigen::MatrixXd base_h = marginal_hist.predict_intent(window).frames;
    hist_ok = hist_ok && (marginal_hist.predict_intent(future_perturbed).frames == base_h);
  }
  VerifyResult m{"variants/marginal_bit_invariant", marginal_ok ? 0.0 : 1.0, 0.0, marginal_ok};
  VerifyResult h{"variants/marginal_hist_bit_invariant", hist_ok ? 0.0 : 1.0, 0.0, hist_ok};
  return {m, h};
}

std::vector<VerifyResult> verify_all() {
  std::vector<VerifyResult> all;
  for (auto& r : verify_gradients()) all.push_back(std::move(r));
  for (auto& r : verify_dct()) all.push_back(std::move(r));
  for (auto& r : verify_translation_equivariance()) all.push_back(std::move(r));
  for (auto& r : verify_variant_contracts()) all.push_back(std::move(r));
  return all;
}

}  // namespace interact
