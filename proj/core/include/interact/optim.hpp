#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "interact/nn.hpp"
#include "interact/tensor.hpp"

namespace interact {

/// Multi-step decay: base_lr * gamma^(number of milestones <= epoch).
struct LRSchedule {
  double base_lr = 3e-4;
  std::vector<int> milestones = {15, 25, 35, 40};
  double gamma = 0.1;

  void validate() const {
    for (std::size_t i = 1; i < milestones.size(); ++i) {
      if (milestones[i] <= milestones[i - 1]) {
        throw std::invalid_argument("lr schedule milestones must be strictly increasing");
      }
    }
  }
};

inline double lr_at(const LRSchedule& schedule, int epoch) {
  if (epoch < 0) throw std::invalid_argument("lr_at: epoch must be >= 0");
  schedule.validate();
  int passed = 0;
  for (int m : schedule.milestones) {
    if (m <= epoch) ++passed;
  }
  return schedule.base_lr * std::pow(schedule.gamma, passed);
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
};

/// Per-parameter first/second moment accumulators, aligned with the store's
/// registration order.
template <typename S>
struct OptimizerState {
  using Matrix = typename Tensor<S>::Matrix;

  AdamConfig config;
  long long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  void init(const ParameterStore<S>& store) {
    step = 0;
    m.clear();
    v.clear();
    for (const auto& p : store.all()) {
      m.push_back(Matrix::Zero(p->rows(), p->cols()));
      v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
};

/// Classic Adam with bias correction. Weight decay is folded into the
/// gradient before the moment updates.
template <typename S>
void adam_step(ParameterStore<S>& store, OptimizerState<S>& state, double lr) {
  const auto& params = store.all();
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match parameter store");
  }
  state.step += 1;
  const S beta1 = static_cast<S>(state.config.beta1);
  const S beta2 = static_cast<S>(state.config.beta2);
  const S eps = static_cast<S>(state.config.eps);
  const S wd = static_cast<S>(state.config.weight_decay);
  // bias correction uses the same-precision betas as the moment updates, so
  // the first-step m_hat/v_hat are exactly 1 in every scalar mode
  const S bc1 =
      S(1) - static_cast<S>(std::pow(static_cast<double>(beta1), state.step));
  const S bc2 =
      S(1) - static_cast<S>(std::pow(static_cast<double>(beta2), state.step));
  const S step_size = static_cast<S>(lr);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    p.ensure_grad();
    typename Tensor<S>::Matrix g = p.grad + wd * p.value;
    state.m[i] = beta1 * state.m[i] + (S(1) - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (S(1) - beta2) * g.cwiseProduct(g);
    const auto m_hat = state.m[i] / bc1;
    const auto v_hat = state.v[i] / bc2;
    p.value -= step_size * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
    if (!p.value.allFinite()) {
      throw std::runtime_error("adam_step: non-finite update for parameter '" + p.name + "'");
    }
  }
}

}  // namespace interact
