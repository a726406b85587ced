#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "interact/dct.hpp"
#include "interact/nn.hpp"
#include "interact/pose.hpp"
#include "interact/tensor.hpp"

namespace interact {

enum class Variant { Marginal, MarginalHist, InteRACT, InteRACTAlign, OnlyFineTuned };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

enum class QuerySource { LastObservedHumanPose, PartnerFutureAction };

/// Wiring differences between the model variants: whether the partner
/// history stream enters the global encoder, what the decoder query is, and
/// whether the alignment terms are trained.
struct VariantSpec {
  Variant name = Variant::InteRACT;
  bool uses_partner_history = true;
  QuerySource query_source = QuerySource::PartnerFutureAction;
  bool align_enabled = false;

  static VariantSpec of(Variant v) {
    switch (v) {
      case Variant::Marginal:
        return {v, false, QuerySource::LastObservedHumanPose, false};
      case Variant::MarginalHist:
        return {v, true, QuerySource::LastObservedHumanPose, false};
      case Variant::InteRACT:
        return {v, true, QuerySource::PartnerFutureAction, false};
      case Variant::InteRACTAlign:
        return {v, true, QuerySource::PartnerFutureAction, true};
      case Variant::OnlyFineTuned:
        // architecturally identical to the conditional model; the difference
        // is the training regime (no pre-training stage)
        return {v, true, QuerySource::PartnerFutureAction, false};
    }
    throw std::logic_error("unreachable variant");
  }
};

struct ModelConfig {
  int horizon = 15;    // forecast steps T
  int human_dim = 27;  // d
  int robot_dim = 6;   // j
  int embed_dim = 32;  // D
  int layers = 3;
  int heads = 4;
  Variant variant = Variant::InteRACT;

  VariantSpec spec() const { return VariantSpec::of(variant); }

  void validate() const {
    if (horizon < 1 || human_dim < 3 || robot_dim < 3 || embed_dim < 1 || layers < 1 ||
        heads < 1) {
      throw std::invalid_argument("model config: all dimensions must be positive");
    }
    if (embed_dim % heads != 0) {
      throw std::invalid_argument("model config: embed_dim " + std::to_string(embed_dim) +
                                  " not divisible by heads " + std::to_string(heads));
    }
  }
};

/// Closed-form trainable-scalar count:
///   embeddings        2 D (d + j) + 4 D
///   encoder stacks    2 L (12 D^2 + 12 D)
///   decoder stack       L (16 D^2 + 17 D)
///   horizon layers    T D^2 + T D + D^2 + D
///   output head       D d + d
std::size_t expected_parameter_count(const ModelConfig& cfg);

/// Model-ready view of one (already centered) scene window, in the scalar type
/// the model runs at. Histories are stored as per-channel DCT coefficients;
/// the query poses stay in joint space.
template <typename S>
struct ModelInput {
  using Matrix = typename Tensor<S>::Matrix;

  Matrix human_hist_dct;    // T x d
  Matrix partner_hist_dct;  // T x d or T x j
  Matrix action_pose;       // 1 x (d or j), centered partner pose at the last future frame
  Matrix last_human_pose;   // 1 x d, centered last observed ego pose
  AgentKind partner_kind = AgentKind::Human;
  bool has_action = true;
  bool has_target = false;
  Matrix target;  // T x d, centered
  SceneOffset offset;
};

template <typename S>
ModelInput<S> make_model_input(const SceneWindow& window, bool has_action = true) {
  auto [centered, offset] = center_scene(window);
  ModelInput<S> in;
  in.offset = offset;
  in.partner_kind = centered.partner_history.layout.agent_kind;
  in.has_action = has_action;
  in.human_hist_dct = dct_forward(centered.human_history.frames).cast<S>();
  in.partner_hist_dct = dct_forward(centered.partner_history.frames).cast<S>();
  in.action_pose = centered.partner_future_action.coords.transpose().template cast<S>();
  in.last_human_pose =
      centered.human_history.frames.row(centered.human_history.length() - 1).template cast<S>();
  in.has_target = centered.target_future.has_value();
  if (in.has_target) in.target = centered.target_future->frames.cast<S>();
  return in;
}

/// The action-conditioned intent forecaster. A local encoder stack reads the
/// ego human's history, a global stack reads the combined human+partner
/// stream, and a decoder turns the partner's future-action embedding (or, for
/// marginal variants, the last observed ego pose) into a T-step forecast.
///
/// All four pose embedding layers (history/future x human/robot) exist in
/// every variant; a variant that never routes data through a layer simply
/// leaves its gradient at zero.
template <typename S>
class InteractModel {
 public:
  using Matrix = typename Tensor<S>::Matrix;

  InteractModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const int d = cfg_.human_dim, j = cfg_.robot_dim, dim = cfg_.embed_dim;
    hist_human_ = LinearLayer<S>(store_, "embed.hist_human", d, dim, rng);
    hist_robot_ = LinearLayer<S>(store_, "embed.hist_robot", j, dim, rng);
    fut_human_ = LinearLayer<S>(store_, "embed.fut_human", d, dim, rng);
    fut_robot_ = LinearLayer<S>(store_, "embed.fut_robot", j, dim, rng);
    for (int l = 0; l < cfg_.layers; ++l) {
      local_.emplace_back(store_, "local." + std::to_string(l), dim, cfg_.heads, rng);
    }
    for (int l = 0; l < cfg_.layers; ++l) {
      global_.emplace_back(store_, "global." + std::to_string(l), dim, cfg_.heads, rng);
    }
    for (int l = 0; l < cfg_.layers; ++l) {
      decoder_.emplace_back(store_, "decoder." + std::to_string(l), dim, cfg_.heads, rng);
    }
    horizon_expand_ = LinearLayer<S>(store_, "horizon.expand", dim, cfg_.horizon * dim, rng);
    horizon_step_ = LinearLayer<S>(store_, "horizon.step", dim, dim, rng);
    head_ = LinearLayer<S>(store_, "head", dim, d, rng);

    idct_basis_ = dct_matrix(cfg_.horizon).transpose().cast<S>();
  }

  InteractModel(const InteractModel&) = delete;
  InteractModel& operator=(const InteractModel&) = delete;
  InteractModel(InteractModel&&) = default;
  InteractModel& operator=(InteractModel&&) = default;

  const ModelConfig& config() const { return cfg_; }

  /// Variants share one parameter set; switching only rewires the forward
  /// pass (used when fine-tuning a pre-trained model under another regime).
  void set_variant(Variant v) { cfg_.variant = v; }

  ParameterStore<S>& params() { return store_; }
  const ParameterStore<S>& params() const { return store_; }
  std::size_t parameter_count() const { return store_.parameter_count(); }

  const LinearLayer<S>& hist_human() const { return hist_human_; }
  const LinearLayer<S>& hist_robot() const { return hist_robot_; }
  const LinearLayer<S>& fut_human() const { return fut_human_; }
  const LinearLayer<S>& fut_robot() const { return fut_robot_; }

  /// Local encoding of the ego stream stacked over the global encoding of the
  /// scene: (2 or 3)T x D memory rows for the decoder.
  TensorPtr<S> encode_context(Tape<S>& tape, const ModelInput<S>& in) const {
    check_input(in);
    auto human = tape.constant(in.human_hist_dct);
    auto human_emb = hist_human_.forward(tape, human);

    auto local = human_emb;
    for (const auto& layer : local_) local = layer.forward(tape, local);

    TensorPtr<S> global_in = human_emb;
    if (cfg_.spec().uses_partner_history) {
      auto partner = tape.constant(in.partner_hist_dct);
      const auto& embed = in.partner_kind == AgentKind::Robot ? hist_robot_ : hist_human_;
      global_in = tape.concat_rows({human_emb, embed.forward(tape, partner)});
    }
    auto global = global_in;
    for (const auto& layer : global_) global = layer.forward(tape, global);

    return tape.concat_rows({local, global});
  }

  /// 1 x D decoder query from the variant's query source.
  TensorPtr<S> build_query(Tape<S>& tape, const ModelInput<S>& in) const {
    if (cfg_.spec().query_source == QuerySource::LastObservedHumanPose) {
      return fut_human_.forward(tape, tape.constant(in.last_human_pose));
    }
    if (!in.has_action) {
      throw std::invalid_argument("conditional variant " + to_string(cfg_.variant) +
                                  " requires a partner future action");
    }
    const auto& embed = in.partner_kind == AgentKind::Robot ? fut_robot_ : fut_human_;
    return embed.forward(tape, tape.constant(in.action_pose));
  }

  /// Full forward pass to a centered T x d forecast (on tape, so gradients can
  /// flow from any loss applied to the result).
  TensorPtr<S> forward(Tape<S>& tape, const ModelInput<S>& in) const {
    auto memory = encode_context(tape, in);
    auto query = build_query(tape, in);
    for (const auto& layer : decoder_) query = layer.forward(tape, query, memory);

    auto horizon_flat = horizon_expand_.forward(tape, query);  // 1 x T*D
    auto horizon = tape.relu(tape.reshape(horizon_flat, cfg_.horizon, cfg_.embed_dim));
    auto stepped = horizon_step_.forward(tape, horizon);  // T x D
    auto coeffs = head_.forward(tape, stepped);           // T x d, DCT domain
    return tape.matmul(tape.constant(idct_basis_), coeffs);
  }

  /// World-frame forecast for one window: center, encode, decode, inverse
  /// transform, and restore the offset.
  PoseTrajectory predict_intent(const SceneWindow& window, bool has_action = true) const {
    const ModelInput<S> in = make_model_input<S>(window, has_action);
    Tape<S> tape(/*grad_enabled=*/false);
    const TensorPtr<S> pred = forward(tape, in);
    Eigen::MatrixXd frames = pred->value.template cast<double>();
    PoseTrajectory centered(JointLayout::human(), std::move(frames),
                            window.human_history.frame_hz);
    return uncenter(centered, in.offset);
  }

 private:
  void check_input(const ModelInput<S>& in) const {
    if (in.human_hist_dct.rows() != cfg_.horizon ||
        in.human_hist_dct.cols() != cfg_.human_dim) {
      throw std::invalid_argument(
          "model input: human history is " + detail::shape_str(
              static_cast<int>(in.human_hist_dct.rows()),
              static_cast<int>(in.human_hist_dct.cols())) +
          ", config expects [" + std::to_string(cfg_.horizon) + " x " +
          std::to_string(cfg_.human_dim) + "]");
    }
    const int partner_dim =
        in.partner_kind == AgentKind::Robot ? cfg_.robot_dim : cfg_.human_dim;
    if (in.partner_hist_dct.rows() != cfg_.horizon ||
        in.partner_hist_dct.cols() != partner_dim) {
      throw std::invalid_argument("model input: partner history does not match layout");
    }
  }

  ModelConfig cfg_;
  ParameterStore<S> store_;
  LinearLayer<S> hist_human_, hist_robot_, fut_human_, fut_robot_;
  std::vector<EncoderLayer<S>> local_, global_;
  std::vector<DecoderLayer<S>> decoder_;
  LinearLayer<S> horizon_expand_;  // D -> T*D
  LinearLayer<S> horizon_step_;    // D -> D, shared across steps
  LinearLayer<S> head_;            // D -> d
  Matrix idct_basis_;              // T x T
};

}  // namespace interact
