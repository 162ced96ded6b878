#pragma once

// Reverse-mode differentiation over dense rank-2 tensors.
//
// A Tape records every primitive applied during a forward pass together with
// a closure that propagates the output gradient to the inputs. Values are
// row-major Eigen matrices; vectors are 1 x n (or B x n for a batch).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ontopath/error.hpp"

namespace ontopath {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
class ParamStore;

template <typename Scalar>
class Tape;

template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  std::int32_t id = -1;

  const Matrix<Scalar>& value() const { return tape->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

inline std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
}

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using V = Var<Scalar>;
  using Backward = std::function<void(Tape&, std::int32_t)>;

  V constant(Mat value) { return push(std::move(value), false, {}); }

  /// Leaf for a named parameter, read in place from `store` (which must
  /// outlive the tape and stay unmodified while it is used). Repeated calls
  /// return the same node so gradients from every use accumulate there.
  V param(const ParamStore<Scalar>& store, const std::string& name) {
    if (const auto it = param_ids_.find(name); it != param_ids_.end()) return {this, it->second};
    nodes_.push_back(Node{Mat(), Mat(), true, {}, &store.get(name)});
    const V v{this, static_cast<std::int32_t>(nodes_.size() - 1)};
    param_ids_.emplace(name, v.id);
    return v;
  }

  V record(Mat value, std::initializer_list<V> inputs, Backward fn) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || requires_grad(in);
    return push(std::move(value), needs, std::move(fn));
  }

  V record(Mat value, std::span<const V> inputs, Backward fn) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || requires_grad(in);
    return push(std::move(value), needs, std::move(fn));
  }

  const Mat& value(V v) const { return node(v.id).get(); }
  const Mat& value(std::int32_t id) const { return node(id).get(); }
  bool requires_grad(V v) const { return node(v.id).requires_grad; }
  bool requires_grad(std::int32_t id) const { return node(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient buffer of a node, zero-initialised on first access.
  Mat& grad(std::int32_t id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.get().rows(), n.get().cols());
    return n.grad;
  }

  template <typename Derived>
  void accumulate(std::int32_t id, const Eigen::MatrixBase<Derived>& g) {
    if (requires_grad(id)) grad(id) += g;
  }

  /// Reverse sweep from a 1x1 loss. Each recorded node is visited once.
  void backward(V loss) {
    if (loss.rows() != 1 || loss.cols() != 1) {
      throw Error(ErrorCode::ShapeMismatch, "backward needs a scalar loss, got " +
                                                shape_str(loss.rows(), loss.cols()));
    }
    grad(loss.id)(0, 0) += Scalar(1);
    for (auto id = loss.id; id >= 0; --id) {
      auto& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.backward || !n.requires_grad || n.grad.size() == 0) continue;
      n.backward(*this, id);
    }
  }

  /// Gradient of every parameter in `store`; parameters not used on this
  /// tape get zeros.
  std::map<std::string, Mat> param_grads(const ParamStore<Scalar>& store) const {
    std::map<std::string, Mat> out;
    for (const auto& [name, value] : store.params()) {
      const auto it = param_ids_.find(name);
      if (it != param_ids_.end() && node(it->second).grad.size() != 0) {
        out.emplace(name, node(it->second).grad);
      } else {
        out.emplace(name, Mat::Zero(value.rows(), value.cols()));
      }
    }
    return out;
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    Backward backward;
    const Mat* external = nullptr;  // parameters are read in place

    const Mat& get() const { return external ? *external : value; }
  };

  const Node& node(std::int32_t id) const { return nodes_.at(static_cast<std::size_t>(id)); }

  V push(Mat value, bool needs, Backward fn) {
    nodes_.push_back(Node{std::move(value), Mat(), needs, needs ? std::move(fn) : Backward(), nullptr});
    return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
  std::map<std::string, std::int32_t> param_ids_;
};

// ---------------------------------------------------------------- primitives

namespace detail {

enum class Broadcast { Same, Row, Col };

template <typename Scalar>
Broadcast broadcast_kind(const Matrix<Scalar>& a, const Matrix<Scalar>& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::Same;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::Col;
  throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape_str(a.rows(), a.cols()) + " vs " +
                                            shape_str(b.rows(), b.cols()));
}

template <typename Scalar, typename Derived>
Matrix<Scalar> reduce_to(Broadcast kind, const Eigen::MatrixBase<Derived>& g) {
  switch (kind) {
    case Broadcast::Row: return g.colwise().sum();
    case Broadcast::Col: return g.rowwise().sum();
    case Broadcast::Same: break;
  }
  return g;
}

template <typename Scalar>
Matrix<Scalar> expand(Broadcast kind, const Matrix<Scalar>& b, Eigen::Index rows, Eigen::Index cols) {
  switch (kind) {
    case Broadcast::Row: return b.replicate(rows, 1);
    case Broadcast::Col: return b.replicate(1, cols);
    case Broadcast::Same: break;
  }
  return b;
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw Error(ErrorCode::ShapeMismatch,
                "matmul: " + shape_str(av.rows(), av.cols()) + " vs " + shape_str(bv.rows(), bv.cols()));
  }
  Matrix<Scalar> out = av * bv;
  return a.tape->record(std::move(out), {a, b}, [ai = a.id, bi = b.id](Tape<Scalar>& t, std::int32_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ai)) t.grad(ai).noalias() += g * t.value(bi).transpose();
    if (t.requires_grad(bi)) t.grad(bi).noalias() += t.value(ai).transpose() * g;
  });
}

/// a + b, where b may be a 1 x n row or m x 1 column broadcast over a.
template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  const auto kind = detail::broadcast_kind(a.value(), b.value(), "add");
  Matrix<Scalar> out = a.value() + detail::expand(kind, b.value(), a.rows(), a.cols());
  return a.tape->record(std::move(out), {a, b}, [ai = a.id, bi = b.id, kind](Tape<Scalar>& t, std::int32_t self) {
    const auto& g = t.grad(self);
    t.accumulate(ai, g);
    if (t.requires_grad(bi)) t.grad(bi) += detail::reduce_to<Scalar>(kind, g);
  });
}

/// Elementwise a * b with the same broadcasting rule as add.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  const auto kind = detail::broadcast_kind(a.value(), b.value(), "mul");
  Matrix<Scalar> out = a.value().cwiseProduct(detail::expand(kind, b.value(), a.rows(), a.cols()));
  return a.tape->record(std::move(out), {a, b}, [ai = a.id, bi = b.id, kind](Tape<Scalar>& t, std::int32_t self) {
    const auto& g = t.grad(self);
    const auto& av = t.value(ai);
    if (t.requires_grad(ai)) {
      t.grad(ai) += g.cwiseProduct(detail::expand(kind, t.value(bi), av.rows(), av.cols()));
    }
    if (t.requires_grad(bi)) t.grad(bi) += detail::reduce_to<Scalar>(kind, g.cwiseProduct(av));
  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  Matrix<Scalar> out = a.value() * s;
  return a.tape->record(std::move(out), {a}, [ai = a.id, s](Tape<Scalar>& t, std::int32_t self) {
    t.grad(ai) += t.grad(self) * s;
  });
}

/// Horizontal concatenation of same-height blocks.
template <typename Scalar>
Var<Scalar> concat(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "concat of nothing");
  const auto rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw Error(ErrorCode::ShapeMismatch,
                  "concat: " + shape_str(rows, parts[0].cols()) + " vs " + shape_str(p.rows(), p.cols()));
    }
    cols += p.cols();
  }
  Matrix<Scalar> out(rows, cols);
  std::vector<std::int32_t> ids;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    ids.push_back(p.id);
  }
  return parts[0].tape->record(std::move(out), parts, [ids](Tape<Scalar>& t, std::int32_t self) {
    const auto& g = t.grad(self);
    Eigen::Index off = 0;
    for (const auto id : ids) {
      const auto w = t.value(id).cols();
      if (t.requires_grad(id)) t.grad(id) += g.middleCols(off, w);
      off += w;
    }
  });
}

template <typename Scalar>
Var<Scalar> concat(Var<Scalar> a, Var<Scalar> b) {
  const Var<Scalar> parts[] = {a, b};
  return concat<Scalar>(std::span<const Var<Scalar>>(parts));
}

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Eigen::Index start, Eigen::Index width) {
  if (start < 0 || width < 0 || start + width > a.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "slice_cols [" + std::to_string(start) + ", " +
                                              std::to_string(start + width) + ") of " +
                                              shape_str(a.rows(), a.cols()));
  }
  Matrix<Scalar> out = a.value().middleCols(start, width);
  return a.tape->record(std::move(out), {a}, [ai = a.id, start, width](Tape<Scalar>& t, std::int32_t self) {
    t.grad(ai).middleCols(start, width) += t.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().array().tanh().matrix();
  return a.tape->record(std::move(out), {a}, [ai = a.id](Tape<Scalar>& t, std::int32_t self) {
    const auto& y = t.value(self);
    t.grad(ai).array() += t.grad(self).array() * (Scalar(1) - y.array().square());
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  Matrix<Scalar> out = (Scalar(1) / (Scalar(1) + (-a.value().array()).exp())).matrix();
  return a.tape->record(std::move(out), {a}, [ai = a.id](Tape<Scalar>& t, std::int32_t self) {
    const auto& y = t.value(self);
    t.grad(ai).array() += t.grad(self).array() * y.array() * (Scalar(1) - y.array());
  });
}

namespace detail {

/// Row-wise stabilised softmax restricted to positions where mask != 0.
template <typename Scalar>
Matrix<Scalar> masked_softmax_value(const Matrix<Scalar>& x, const Matrix<Scalar>* mask) {
  Matrix<Scalar> y = Matrix<Scalar>::Zero(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Scalar hi = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (!mask || (*mask)(r, c) != 0) hi = std::max(hi, x(r, c));
    }
    if (hi == -std::numeric_limits<Scalar>::infinity()) {
      throw Error(ErrorCode::ShapeMismatch, "softmax row " + std::to_string(r) + " has no unmasked entry");
    }
    Scalar total = 0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (!mask || (*mask)(r, c) != 0) {
        y(r, c) = std::exp(x(r, c) - hi);
        total += y(r, c);
      }
    }
    y.row(r) /= total;
  }
  return y;
}

}  // namespace detail

/// Row-wise softmax.
template <typename Scalar>
Var<Scalar> softmax(Var<Scalar> a) {
  Matrix<Scalar> out = detail::masked_softmax_value<Scalar>(a.value(), nullptr);
  return a.tape->record(std::move(out), {a}, [ai = a.id](Tape<Scalar>& t, std::int32_t self) {
    const auto& y = t.value(self);
    const auto& g = t.grad(self);
    const Matrix<Scalar> dot = g.cwiseProduct(y).rowwise().sum();
    t.grad(ai) += y.cwiseProduct(g - dot.replicate(1, y.cols()));
  });
}

/// Row-wise softmax where entries with mask == 0 get probability 0.
template <typename Scalar>
Var<Scalar> masked_softmax(Var<Scalar> a, const Matrix<Scalar>& mask) {
  if (mask.rows() != a.rows() || mask.cols() != a.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "masked_softmax: " + shape_str(a.rows(), a.cols()) + " vs mask " +
                                              shape_str(mask.rows(), mask.cols()));
  }
  Matrix<Scalar> out = detail::masked_softmax_value<Scalar>(a.value(), &mask);
  return a.tape->record(std::move(out), {a}, [ai = a.id](Tape<Scalar>& t, std::int32_t self) {
    const auto& y = t.value(self);
    const auto& g = t.grad(self);
    const Matrix<Scalar> dot = g.cwiseProduct(y).rowwise().sum();
    t.grad(ai) += y.cwiseProduct(g - dot.replicate(1, y.cols()));
  });
}

/// Rows of `table` selected by `rows` (embedding lookup).
template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> table, std::vector<std::int32_t> rows) {
  const auto& tv = table.value();
  Matrix<Scalar> out(static_cast<Eigen::Index>(rows.size()), tv.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= tv.rows()) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "row " + std::to_string(rows[r]) + " of " + shape_str(tv.rows(), tv.cols()));
    }
    out.row(static_cast<Eigen::Index>(r)) = tv.row(rows[r]);
  }
  return table.tape->record(std::move(out), {table}, [ti = table.id, rows = std::move(rows)](Tape<Scalar>& t, std::int32_t self) {
    const auto& g = t.grad(self);
    auto& gt = t.grad(ti);
    for (std::size_t r = 0; r < rows.size(); ++r) gt.row(rows[r]) += g.row(static_cast<Eigen::Index>(r));
  });
}

template <typename Scalar>
Var<Scalar> pick_row(Var<Scalar> table, std::int32_t row) {
  return gather_rows(table, std::vector<std::int32_t>{row});
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape->record(std::move(out), {a}, [ai = a.id](Tape<Scalar>& t, std::int32_t self) {
    t.grad(ai).array() += t.grad(self)(0, 0);
  });
}

/// sum_r weight[r] * -log softmax(logits[r])[targets[r]] as a 1x1 value,
/// stabilised by max subtraction. Rows with weight 0 are skipped entirely.
template <typename Scalar>
Var<Scalar> softmax_cross_entropy(Var<Scalar> logits, std::vector<std::int32_t> targets,
                                  std::vector<Scalar> weights) {
  const auto& x = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != x.rows() || targets.size() != weights.size()) {
    throw Error(ErrorCode::ShapeMismatch, "cross entropy: " + std::to_string(targets.size()) +
                                              " targets for " + shape_str(x.rows(), x.cols()));
  }
  Matrix<Scalar> probs = Matrix<Scalar>::Zero(x.rows(), x.cols());
  Scalar loss = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto w = weights[static_cast<std::size_t>(r)];
    if (w == 0) continue;
    const auto k = targets[static_cast<std::size_t>(r)];
    if (k < 0 || k >= x.cols()) {
      throw Error(ErrorCode::IndexOutOfRange, "target " + std::to_string(k) + " with " +
                                                  std::to_string(x.cols()) + " classes");
    }
    const Scalar hi = x.row(r).maxCoeff();
    const auto shifted = (x.row(r).array() - hi).eval();
    const Scalar total = shifted.exp().sum();
    loss += w * (std::log(total) - shifted(k));
    probs.row(r) = (shifted.exp() / total).matrix();
  }
  Matrix<Scalar> out(1, 1);
  out(0, 0) = loss;
  return logits.tape->record(
      std::move(out), {logits},
      [li = logits.id, probs = std::move(probs), targets = std::move(targets), weights = std::move(weights)](
          Tape<Scalar>& t, std::int32_t self) {
        const Scalar g = t.grad(self)(0, 0);
        auto& gl = t.grad(li);
        for (Eigen::Index r = 0; r < probs.rows(); ++r) {
          const auto w = weights[static_cast<std::size_t>(r)];
          if (w == 0) continue;
          gl.row(r) += (g * w) * probs.row(r);
          gl(r, targets[static_cast<std::size_t>(r)]) -= g * w;
        }
      });
}

/// -log softmax(logits)[target] for a single 1 x K row.
template <typename Scalar>
Var<Scalar> cross_entropy(Var<Scalar> logits, std::int32_t target) {
  if (logits.rows() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "cross_entropy expects one row, got " +
                                              shape_str(logits.rows(), logits.cols()));
  }
  return softmax_cross_entropy(logits, std::vector<std::int32_t>{target}, std::vector<Scalar>{Scalar(1)});
}

}  // namespace ontopath
