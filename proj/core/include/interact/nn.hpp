#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "interact/rng.hpp"
#include "interact/tensor.hpp"

namespace interact {

/// Registry of named trainable tensors with a fixed iteration order (the
/// registration order). Every parameter is registered exactly once.
template <typename S>
class ParameterStore {
 public:
  using Matrix = typename Tensor<S>::Matrix;

  /// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init used by linear weights and
  /// biases.
  TensorPtr<S> create_fan_in(const std::string& name, int rows, int cols, int fan_in,
                             Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = static_cast<S>(rng.uniform(-bound, bound));
    }
    return insert(name, std::move(m));
  }

  TensorPtr<S> create_constant(const std::string& name, int rows, int cols, S fill) {
    return insert(name, Matrix::Constant(rows, cols, fill));
  }

  TensorPtr<S> get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw std::invalid_argument("parameter store has no entry '" + name + "'");
    }
    return params_[it->second];
  }

  const std::vector<TensorPtr<S>>& all() const { return params_; }
  std::size_t tensor_count() const { return params_.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->size());
    return n;
  }

  void zero_grad() {
    for (const auto& p : params_) p->zero_grad();
  }

 private:
  TensorPtr<S> insert(const std::string& name, Matrix m) {
    if (index_.count(name)) {
      throw std::invalid_argument("parameter '" + name + "' registered twice");
    }
    auto t = make_tensor<S>(std::move(m), /*requires_grad=*/true, name);
    index_[name] = params_.size();
    params_.push_back(t);
    return t;
  }

  std::vector<TensorPtr<S>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Split-by-head scaled dot-product attention. Q, K, V are already projected;
/// per head h the weights are softmax(Q_h K_h^T / sqrt(D/heads)), the head
/// outputs are concatenated and passed through the output projection (wo, bo).
template <typename S>
TensorPtr<S> multi_head_attention(Tape<S>& tape, const TensorPtr<S>& q,
                                  const TensorPtr<S>& k, const TensorPtr<S>& v,
                                  const TensorPtr<S>& wo, const TensorPtr<S>& bo,
                                  int heads) {
  const int d = q->cols();
  if (heads < 1 || d % heads != 0) {
    throw std::invalid_argument("multi_head_attention: embed dim " + std::to_string(d) +
                                " not divisible by " + std::to_string(heads) + " heads");
  }
  if (k->cols() != d || v->cols() != d || k->rows() != v->rows()) {
    throw std::invalid_argument("multi_head_attention: K/V shapes inconsistent with Q");
  }
  const int dh = d / heads;
  const S inv_sqrt = S(1) / static_cast<S>(std::sqrt(static_cast<double>(dh)));

  std::vector<TensorPtr<S>> head_outputs;
  head_outputs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    auto qh = tape.slice_cols(q, h * dh, dh);
    auto kh = tape.slice_cols(k, h * dh, dh);
    auto vh = tape.slice_cols(v, h * dh, dh);
    auto scores = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt);
    auto weights = tape.softmax_rows(scores);
    head_outputs.push_back(tape.matmul(weights, vh));
  }
  auto merged = heads == 1 ? head_outputs[0] : tape.concat_cols(head_outputs);
  return tape.linear(merged, wo, bo);
}

template <typename S>
struct LinearLayer {
  TensorPtr<S> w;
  TensorPtr<S> b;

  LinearLayer() = default;
  LinearLayer(ParameterStore<S>& store, const std::string& prefix, int in, int out, Rng& rng)
      : w(store.create_fan_in(prefix + ".w", in, out, in, rng)),
        b(store.create_fan_in(prefix + ".b", 1, out, in, rng)) {}

  TensorPtr<S> forward(Tape<S>& tape, const TensorPtr<S>& x) const {
    return tape.linear(x, w, b);
  }
};

template <typename S>
struct LayerNormBlock {
  TensorPtr<S> gain;
  TensorPtr<S> bias;

  LayerNormBlock() = default;
  LayerNormBlock(ParameterStore<S>& store, const std::string& prefix, int dim)
      : gain(store.create_constant(prefix + ".gain", 1, dim, S(1))),
        bias(store.create_constant(prefix + ".bias", 1, dim, S(0))) {}

  TensorPtr<S> forward(Tape<S>& tape, const TensorPtr<S>& x) const {
    return tape.layer_norm(x, gain, bias);
  }
};

template <typename S>
struct AttentionBlock {
  LinearLayer<S> q, v;
  TensorPtr<S> wk;  // no key bias: a shared key offset cancels inside softmax
  TensorPtr<S> wo, bo;
  int heads = 1;

  AttentionBlock() = default;
  AttentionBlock(ParameterStore<S>& store, const std::string& prefix, int dim, int n_heads,
                 Rng& rng)
      : q(store, prefix + ".q", dim, dim, rng),
        v(store, prefix + ".v", dim, dim, rng),
        wk(store.create_fan_in(prefix + ".k.w", dim, dim, dim, rng)),
        wo(store.create_fan_in(prefix + ".o.w", dim, dim, dim, rng)),
        bo(store.create_fan_in(prefix + ".o.b", 1, dim, dim, rng)),
        heads(n_heads) {}

  TensorPtr<S> forward(Tape<S>& tape, const TensorPtr<S>& query_in,
                       const TensorPtr<S>& kv_in) const {
    return multi_head_attention(tape, q.forward(tape, query_in), tape.matmul(kv_in, wk),
                                v.forward(tape, kv_in), wo, bo, heads);
  }
};

/// linear(D -> 4D), ReLU, linear(4D -> D).
template <typename S>
struct FeedForwardBlock {
  LinearLayer<S> expand;
  LinearLayer<S> project;

  FeedForwardBlock() = default;
  FeedForwardBlock(ParameterStore<S>& store, const std::string& prefix, int dim, Rng& rng)
      : expand(store, prefix + ".ff1", dim, 4 * dim, rng),
        project(store, prefix + ".ff2", 4 * dim, dim, rng) {}

  TensorPtr<S> forward(Tape<S>& tape, const TensorPtr<S>& x) const {
    return project.forward(tape, tape.relu(expand.forward(tape, x)));
  }
};

/// Pre-norm residual encoder layer: x + MHA(LN(x)), then x + FFN(LN(x)).
template <typename S>
struct EncoderLayer {
  LayerNormBlock<S> ln1;
  AttentionBlock<S> attn;
  LayerNormBlock<S> ln2;
  FeedForwardBlock<S> ffn;

  EncoderLayer() = default;
  EncoderLayer(ParameterStore<S>& store, const std::string& prefix, int dim, int heads,
               Rng& rng)
      : ln1(store, prefix + ".ln1", dim),
        attn(store, prefix + ".attn", dim, heads, rng),
        ln2(store, prefix + ".ln2", dim),
        ffn(store, prefix + ".ffn", dim, rng) {}

  TensorPtr<S> forward(Tape<S>& tape, const TensorPtr<S>& x) const {
    auto normed = ln1.forward(tape, x);
    auto x1 = tape.add(x, attn.forward(tape, normed, normed));
    return tape.add(x1, ffn.forward(tape, ln2.forward(tape, x1)));
  }
};

/// Pre-norm decoder layer with self-attention, cross-attention over the
/// encoder memory, and a feed-forward block.
template <typename S>
struct DecoderLayer {
  LayerNormBlock<S> ln1;
  AttentionBlock<S> self_attn;
  LayerNormBlock<S> ln2;
  AttentionBlock<S> cross_attn;
  LayerNormBlock<S> ln3;
  FeedForwardBlock<S> ffn;

  DecoderLayer() = default;
  DecoderLayer(ParameterStore<S>& store, const std::string& prefix, int dim, int heads,
               Rng& rng)
      : ln1(store, prefix + ".ln1", dim),
        self_attn(store, prefix + ".self", dim, heads, rng),
        ln2(store, prefix + ".ln2", dim),
        cross_attn(store, prefix + ".cross", dim, heads, rng),
        ln3(store, prefix + ".ln3", dim),
        ffn(store, prefix + ".ffn", dim, rng) {}

  TensorPtr<S> forward(Tape<S>& tape, const TensorPtr<S>& query,
                       const TensorPtr<S>& memory) const {
    auto normed = ln1.forward(tape, query);
    auto q1 = tape.add(query, self_attn.forward(tape, normed, normed));
    auto q2 = tape.add(q1, cross_attn.forward(tape, ln2.forward(tape, q1), memory));
    return tape.add(q2, ffn.forward(tape, ln3.forward(tape, q2)));
  }
};

}  // namespace interact
