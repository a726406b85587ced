#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "interact/tensor.hpp"

namespace interact {

struct GradCheckReport {
  std::string op_name;
  double max_rel_error = 0.0;
  std::string worst_tensor;
  int worst_index = -1;
};

/// Central-difference audit of reverse-mode gradients. `fn` rebuilds the
/// scalar-valued computation from the current leaf values on the given tape;
/// it is evaluated 2 x (total leaf coordinates) times at 64-bit precision.
///
/// Relative error per coordinate is |analytic - numeric| divided by
/// max(1e-8, |analytic| + |numeric|).
inline GradCheckReport grad_check(
    const std::string& op_name,
    const std::function<TensorPtr<double>(Tape<double>&)>& fn,
    const std::vector<TensorPtr<double>>& leaves, double h = 1e-5) {
  for (const auto& leaf : leaves) {
    if (!leaf->requires_grad) {
      throw std::invalid_argument("grad_check: leaf '" + leaf->name +
                                  "' does not require gradients");
    }
    leaf->ensure_grad();
    leaf->zero_grad();
  }

  Tape<double> tape;
  TensorPtr<double> out = fn(tape);
  if (out->size() != 1) {
    throw std::invalid_argument("grad_check: function output must be scalar");
  }
  tape.backward(out);

  auto eval = [&fn]() {
    Tape<double> inference(/*grad_enabled=*/false);
    return fn(inference)->value(0, 0);
  };

  GradCheckReport report;
  report.op_name = op_name;
  for (const auto& leaf : leaves) {
    double* data = leaf->value.data();
    const double* analytic = leaf->grad.data();
    for (int i = 0; i < leaf->size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double f_plus = eval();
      data[i] = saved - h;
      const double f_minus = eval();
      data[i] = saved;

      const double numeric = (f_plus - f_minus) / (2.0 * h);
      if (!std::isfinite(numeric) || !std::isfinite(analytic[i])) {
        throw std::runtime_error("grad_check(" + op_name + "): non-finite gradient for '" +
                                 leaf->name + "' at index " + std::to_string(i));
      }
      const double rel = std::abs(analytic[i] - numeric) /
                         std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_tensor = leaf->name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace interact
