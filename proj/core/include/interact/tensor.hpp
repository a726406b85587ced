#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace interact {

/// Dense 2-D tensor node. Instantiated at 64-bit for gradient verification and
/// 32-bit for training. Leaves (parameters, inputs) are created with
/// make_tensor; everything else comes out of Tape ops.
///
/// Gradient buffers of leaves accumulate across backward passes until
/// zero_grad; tape-owned intermediates are cleared at the start of every
/// backward pass.
template <typename S>
struct Tensor {
  using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  bool tape_owned = false;
  std::string name;

  int rows() const { return static_cast<int>(value.rows()); }
  int cols() const { return static_cast<int>(value.cols()); }
  std::vector<int> shape() const { return {rows(), cols()}; }
  int size() const { return rows() * cols(); }

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Matrix::Zero(value.rows(), value.cols());
    }
  }
  void zero_grad() {
    if (requires_grad) grad.setZero();
  }
};

template <typename S>
using TensorPtr = std::shared_ptr<Tensor<S>>;

template <typename S>
TensorPtr<S> make_tensor(typename Tensor<S>::Matrix value, bool requires_grad = false,
                         std::string name = "") {
  auto t = std::make_shared<Tensor<S>>();
  t->value = std::move(value);
  t->requires_grad = requires_grad;
  t->name = std::move(name);
  if (requires_grad) t->ensure_grad();
  return t;
}

namespace detail {
inline std::string shape_str(int r, int c) {
  return "[" + std::to_string(r) + " x " + std::to_string(c) + "]";
}
template <typename S>
std::string shape_str(const TensorPtr<S>& t) {
  return shape_str(t->rows(), t->cols());
}
}  // namespace detail

/// Toggles post-op finiteness checks (cheap at desk scale, off by default).
void set_debug_finite_checks(bool enabled);
bool debug_finite_checks();

/// Records forward operations and replays their adjoints in reverse order.
/// A tape is confined to one thread. Construct with grad_enabled=false for
/// pure inference: no adjoints are recorded and outputs carry no grad.
template <typename S>
class Tape {
 public:
  using Matrix = typename Tensor<S>::Matrix;
  using Ptr = TensorPtr<S>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t recorded_ops() const { return records_.size(); }

  /// Wraps plain data that never receives a gradient.
  Ptr constant(Matrix m, std::string name = "") {
    return make_tensor<S>(std::move(m), false, std::move(name));
  }

  // ---- elementwise -----------------------------------------------------

  Ptr add(const Ptr& a, const Ptr& b) {
    require_same_shape("add", a, b);
    Ptr out = make_output(a->value + b->value, wants_grad(a, b));
    if (out->requires_grad) {
      record([a, b, out] {
        accumulate(a, out->grad);
        accumulate(b, out->grad);
      });
    }
    return out;
  }

  Ptr sub(const Ptr& a, const Ptr& b) {
    require_same_shape("sub", a, b);
    Ptr out = make_output(a->value - b->value, wants_grad(a, b));
    if (out->requires_grad) {
      record([a, b, out] {
        accumulate(a, out->grad);
        accumulate(b, -out->grad);
      });
    }
    return out;
  }

  Ptr mul(const Ptr& a, const Ptr& b) {
    require_same_shape("mul", a, b);
    Ptr out = make_output(a->value.cwiseProduct(b->value), wants_grad(a, b));
    if (out->requires_grad) {
      record([a, b, out] {
        accumulate(a, out->grad.cwiseProduct(b->value));
        accumulate(b, out->grad.cwiseProduct(a->value));
      });
    }
    return out;
  }

  Ptr scale(const Ptr& a, S factor) {
    Ptr out = make_output(a->value * factor, a->requires_grad);
    if (out->requires_grad) {
      record([a, out, factor] { accumulate(a, out->grad * factor); });
    }
    return out;
  }

  Ptr relu(const Ptr& a) {
    Ptr out = make_output(a->value.cwiseMax(S(0)), a->requires_grad);
    if (out->requires_grad) {
      record([a, out] {
        accumulate(a, (a->value.array() > S(0)).template cast<S>().matrix().cwiseProduct(out->grad));
      });
    }
    return out;
  }

  // ---- matrix products ---------------------------------------------------

  Ptr matmul(const Ptr& a, const Ptr& b) {
    if (a->cols() != b->rows()) {
      throw std::invalid_argument("matmul: inner dimensions differ, " +
                                  detail::shape_str(a) + " vs " + detail::shape_str(b));
    }
    Ptr out = make_output(a->value * b->value, wants_grad(a, b));
    if (out->requires_grad) {
      record([a, b, out] {
        if (a->requires_grad) accumulate(a, out->grad * b->value.transpose());
        if (b->requires_grad) accumulate(b, a->value.transpose() * out->grad);
      });
    }
    return out;
  }

  /// y = a * b^T; used for attention scores.
  Ptr matmul_nt(const Ptr& a, const Ptr& b) {
    if (a->cols() != b->cols()) {
      throw std::invalid_argument("matmul_nt: column counts differ, " +
                                  detail::shape_str(a) + " vs " + detail::shape_str(b));
    }
    Ptr out = make_output(a->value * b->value.transpose(), wants_grad(a, b));
    if (out->requires_grad) {
      record([a, b, out] {
        if (a->requires_grad) accumulate(a, out->grad * b->value);
        if (b->requires_grad) accumulate(b, out->grad.transpose() * a->value);
      });
    }
    return out;
  }

  /// y = x W + b with b broadcast over rows; the workhorse projection.
  Ptr linear(const Ptr& x, const Ptr& w, const Ptr& b) {
    if (x->cols() != w->rows()) {
      throw std::invalid_argument("linear: input " + detail::shape_str(x) +
                                  " does not match weight " + detail::shape_str(w));
    }
    if (b->rows() != 1 || b->cols() != w->cols()) {
      throw std::invalid_argument("linear: bias " + detail::shape_str(b) +
                                  " does not match weight " + detail::shape_str(w));
    }
    Matrix y = x->value * w->value;
    y.rowwise() += b->value.row(0);
    Ptr out = make_output(std::move(y), x->requires_grad || w->requires_grad || b->requires_grad);
    if (out->requires_grad) {
      record([x, w, b, out] {
        if (x->requires_grad) accumulate(x, out->grad * w->value.transpose());
        if (w->requires_grad) accumulate(w, x->value.transpose() * out->grad);
        if (b->requires_grad) accumulate(b, out->grad.colwise().sum());
      });
    }
    return out;
  }

  // ---- normalization and attention pieces ---------------------------------

  Ptr softmax_rows(const Ptr& x) {
    Matrix y(x->rows(), x->cols());
    for (int i = 0; i < x->rows(); ++i) {
      const S m = x->value.row(i).maxCoeff();
      Eigen::Array<S, 1, Eigen::Dynamic> e = (x->value.row(i).array() - m).exp();
      y.row(i) = (e / e.sum()).matrix();
    }
    Ptr out = make_output(std::move(y), x->requires_grad);
    if (out->requires_grad) {
      record([x, out] {
        Matrix dx(out->grad.rows(), out->grad.cols());
        for (int i = 0; i < out->grad.rows(); ++i) {
          const S dot = out->grad.row(i).dot(out->value.row(i));
          dx.row(i) =
              (out->grad.row(i).array() - dot) * out->value.row(i).array();
        }
        accumulate(x, dx);
      });
    }
    return out;
  }

  /// Row-wise layer normalization with learnable gain and bias (both 1 x D).
  Ptr layer_norm(const Ptr& x, const Ptr& gain, const Ptr& bias, S eps = S(1e-5)) {
    if (gain->rows() != 1 || gain->cols() != x->cols() || bias->rows() != 1 ||
        bias->cols() != x->cols()) {
      throw std::invalid_argument("layer_norm: gain/bias must be 1 x " +
                                  std::to_string(x->cols()));
    }
    const int d = x->cols();
    Matrix xhat(x->rows(), d);
    Eigen::Matrix<S, Eigen::Dynamic, 1> rstd(x->rows());
    for (int i = 0; i < x->rows(); ++i) {
      const S mean = x->value.row(i).mean();
      const S var = (x->value.row(i).array() - mean).square().sum() / d;
      rstd(i) = S(1) / std::sqrt(var + eps);
      xhat.row(i) = (x->value.row(i).array() - mean) * rstd(i);
    }
    Matrix y = xhat;
    y.array().rowwise() *= gain->value.row(0).array();
    y.rowwise() += bias->value.row(0);
    Ptr out = make_output(std::move(y), x->requires_grad || gain->requires_grad ||
                                            bias->requires_grad);
    if (out->requires_grad) {
      auto xhat_saved = std::make_shared<Matrix>(std::move(xhat));
      auto rstd_saved = std::make_shared<Eigen::Matrix<S, Eigen::Dynamic, 1>>(std::move(rstd));
      record([x, gain, bias, out, xhat_saved, rstd_saved, d] {
        if (gain->requires_grad) {
          accumulate(gain, out->grad.cwiseProduct(*xhat_saved).colwise().sum());
        }
        if (bias->requires_grad) accumulate(bias, out->grad.colwise().sum());
        if (x->requires_grad) {
          Matrix dx(out->grad.rows(), d);
          for (int i = 0; i < out->grad.rows(); ++i) {
            Eigen::Array<S, 1, Eigen::Dynamic> dxhat =
                out->grad.row(i).array() * gain->value.row(0).array();
            const S mean_dxhat = dxhat.mean();
            const S mean_dxhat_xhat = (dxhat * xhat_saved->row(i).array()).mean();
            dx.row(i) = ((dxhat - mean_dxhat -
                          xhat_saved->row(i).array() * mean_dxhat_xhat) *
                         (*rstd_saved)(i))
                            .matrix();
          }
          accumulate(x, dx);
        }
      });
    }
    return out;
  }

  // ---- shape surgery -------------------------------------------------------

  Ptr slice_cols(const Ptr& x, int start, int count) {
    if (start < 0 || count < 1 || start + count > x->cols()) {
      throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + ", " +
                                  std::to_string(start + count) + ") outside " +
                                  detail::shape_str(x));
    }
    Ptr out = make_output(x->value.middleCols(start, count), x->requires_grad);
    if (out->requires_grad) {
      record([x, out, start, count] {
        x->ensure_grad();
        x->grad.middleCols(start, count) += out->grad;
      });
    }
    return out;
  }

  Ptr concat_cols(const std::vector<Ptr>& parts) { return concat(parts, /*by_rows=*/false); }
  Ptr concat_rows(const std::vector<Ptr>& parts) { return concat(parts, /*by_rows=*/true); }

  /// Row-major reinterpretation to (rows x cols); element order is preserved.
  Ptr reshape(const Ptr& x, int rows, int cols) {
    if (rows * cols != x->size()) {
      throw std::invalid_argument("reshape: cannot view " + detail::shape_str(x) + " as " +
                                  detail::shape_str(rows, cols));
    }
    Matrix y = Eigen::Map<const Matrix>(x->value.data(), rows, cols);
    Ptr out = make_output(std::move(y), x->requires_grad);
    if (out->requires_grad) {
      record([x, out] {
        accumulate(x, Eigen::Map<const Matrix>(out->grad.data(), x->rows(), x->cols()));
      });
    }
    return out;
  }

  // ---- reductions and similarity -------------------------------------------

  Ptr sum_all(const Ptr& x) {
    Matrix y(1, 1);
    y(0, 0) = x->value.sum();
    Ptr out = make_output(std::move(y), x->requires_grad);
    if (out->requires_grad) {
      record([x, out] {
        accumulate(x, Matrix::Constant(x->rows(), x->cols(), out->grad(0, 0)));
      });
    }
    return out;
  }

  /// Per-row cosine similarity of two equally shaped matrices -> P x 1.
  /// Rows with (near-)zero norm make the similarity undefined and throw.
  Ptr row_cosine(const Ptr& a, const Ptr& b) {
    require_same_shape("row_cosine", a, b);
    const int p = a->rows();
    Matrix y(p, 1);
    Eigen::Matrix<S, Eigen::Dynamic, 1> na(p), nb(p);
    for (int i = 0; i < p; ++i) {
      na(i) = a->value.row(i).norm();
      nb(i) = b->value.row(i).norm();
      if (na(i) < S(1e-12) || nb(i) < S(1e-12)) {
        throw std::domain_error("row_cosine: zero-norm embedding at row " + std::to_string(i));
      }
      y(i, 0) = a->value.row(i).dot(b->value.row(i)) / (na(i) * nb(i));
    }
    Ptr out = make_output(std::move(y), wants_grad(a, b));
    if (out->requires_grad) {
      auto na_saved = std::make_shared<Eigen::Matrix<S, Eigen::Dynamic, 1>>(std::move(na));
      auto nb_saved = std::make_shared<Eigen::Matrix<S, Eigen::Dynamic, 1>>(std::move(nb));
      record([a, b, out, na_saved, nb_saved] {
        Matrix da(a->rows(), a->cols()), db(b->rows(), b->cols());
        for (int i = 0; i < a->rows(); ++i) {
          const S g = out->grad(i, 0);
          const S s = out->value(i, 0);
          const S inv = S(1) / ((*na_saved)(i) * (*nb_saved)(i));
          da.row(i) = g * (b->value.row(i) * inv -
                           a->value.row(i) * (s / ((*na_saved)(i) * (*na_saved)(i))));
          db.row(i) = g * (a->value.row(i) * inv -
                           b->value.row(i) * (s / ((*nb_saved)(i) * (*nb_saved)(i))));
        }
        if (a->requires_grad) accumulate(a, da);
        if (b->requires_grad) accumulate(b, db);
      });
    }
    return out;
  }

  // ---- reverse pass ----------------------------------------------------

  /// Seeds the (scalar) root with 1 and replays all adjoints in reverse
  /// recording order. Intermediate gradients are rebuilt from scratch each
  /// call; leaf gradients accumulate.
  void backward(const Ptr& root) {
    if (!grad_enabled_) {
      throw std::logic_error("backward() on an inference tape");
    }
    if (root->size() != 1) {
      throw std::invalid_argument("backward: root must be scalar, is " +
                                  detail::shape_str(root));
    }
    for (auto& t : produced_) t->zero_grad();
    root->ensure_grad();
    root->grad(0, 0) += S(1);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
  }

 private:
  static bool wants_grad(const Ptr& a, const Ptr& b) {
    return a->requires_grad || b->requires_grad;
  }

  static void accumulate(const Ptr& t, const auto& delta) {
    if (!t->requires_grad) return;
    t->ensure_grad();
    t->grad += delta;
  }

  void require_same_shape(const char* op, const Ptr& a, const Ptr& b) const {
    if (a->rows() != b->rows() || a->cols() != b->cols()) {
      throw std::invalid_argument(std::string(op) + ": shapes differ, " +
                                  detail::shape_str(a) + " vs " + detail::shape_str(b));
    }
  }

  Ptr concat(const std::vector<Ptr>& parts, bool by_rows) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    int rows = parts[0]->rows(), cols = parts[0]->cols();
    bool any_grad = false;
    for (const auto& p : parts) {
      any_grad = any_grad || p->requires_grad;
      if (by_rows ? p->cols() != cols : p->rows() != rows) {
        throw std::invalid_argument("concat: incompatible part " + detail::shape_str(p));
      }
    }
    int total = 0;
    for (const auto& p : parts) total += by_rows ? p->rows() : p->cols();
    Matrix y(by_rows ? total : rows, by_rows ? cols : total);
    int at = 0;
    for (const auto& p : parts) {
      if (by_rows) {
        y.middleRows(at, p->rows()) = p->value;
        at += p->rows();
      } else {
        y.middleCols(at, p->cols()) = p->value;
        at += p->cols();
      }
    }
    Ptr out = make_output(std::move(y), any_grad);
    if (out->requires_grad) {
      record([parts, out, by_rows] {
        int at2 = 0;
        for (const auto& p : parts) {
          const int extent = by_rows ? p->rows() : p->cols();
          if (p->requires_grad) {
            p->ensure_grad();
            if (by_rows) {
              p->grad += out->grad.middleRows(at2, extent);
            } else {
              p->grad += out->grad.middleCols(at2, extent);
            }
          }
          at2 += extent;
        }
      });
    }
    return out;
  }

  Ptr make_output(Matrix value, bool requires_grad) {
    if (debug_finite_checks() && !value.allFinite()) {
      throw std::runtime_error("tensor op produced non-finite values");
    }
    auto t = std::make_shared<Tensor<S>>();
    t->value = std::move(value);
    t->requires_grad = grad_enabled_ && requires_grad;
    t->tape_owned = true;
    if (t->requires_grad) {
      t->ensure_grad();
      produced_.push_back(t);
    }
    return t;
  }

  void record(std::function<void()> fn) { records_.push_back(std::move(fn)); }

  bool grad_enabled_;
  std::vector<std::function<void()>> records_;
  std::vector<Ptr> produced_;
};

}  // namespace interact
