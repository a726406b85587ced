#include "interact/model.hpp"

namespace interact {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Marginal: return "Marginal";
    case Variant::MarginalHist: return "MarginalHist";
    case Variant::InteRACT: return "InteRACT";
    case Variant::InteRACTAlign: return "InteRACT_Align";
    case Variant::OnlyFineTuned: return "OnlyFineTuned";
  }
  return "InteRACT";
}

Variant variant_from_string(const std::string& s) {
  if (s == "Marginal") return Variant::Marginal;
  if (s == "MarginalHist") return Variant::MarginalHist;
  if (s == "InteRACT") return Variant::InteRACT;
  if (s == "InteRACT_Align") return Variant::InteRACTAlign;
  if (s == "OnlyFineTuned") return Variant::OnlyFineTuned;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

std::size_t expected_parameter_count(const ModelConfig& cfg) {
  const std::size_t d = cfg.human_dim, j = cfg.robot_dim, dim = cfg.embed_dim;
  const std::size_t t = cfg.horizon, layers = cfg.layers;
  const std::size_t embeddings = 2 * dim * (d + j) + 4 * dim;
  // attention block 4 D^2 + 3 D (q/v/o biased, k bias-free), two layer norms
  // 4 D, feed-forward 8 D^2 + 5 D
  const std::size_t encoder = 12 * dim * dim + 12 * dim;
  const std::size_t decoder = 16 * dim * dim + 17 * dim;
  const std::size_t horizon = t * dim * dim + t * dim + dim * dim + dim;
  const std::size_t head = dim * d + d;
  return embeddings + 2 * layers * encoder + layers * decoder + horizon + head;
}

}  // namespace interact
