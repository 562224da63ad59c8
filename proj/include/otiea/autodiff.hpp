#pragma once

// Minimal reverse-mode differentiation over dense row-major matrices.
//
// A Tape records every intermediate value together with a closure that
// pushes the output gradient back into its parents. All operators in this
// header are free functions over Var handles; the tape owns the storage.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace otiea {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Assignment of rows to groups. Softmax and sums are taken within a group.
struct Segments {
  std::vector<Index> ids;
  Index count = 0;

  std::vector<Index> sizes() const {
    std::vector<Index> out(static_cast<std::size_t>(count), 0);
    for (Index id : ids) ++out[static_cast<std::size_t>(id)];
    return out;
  }
};

namespace ad {

template <typename Scalar>
class Tape;

template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix<Scalar>& value() const { return tape_->value(id_); }
  // Empty until backward() has reached this node.
  const Matrix<Scalar>& grad() const { return tape_->grad(id_); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape<Scalar>* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar>
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> constant(Matrix<Scalar> value) {
    return push(std::move(value), false, nullptr);
  }

  Var<Scalar> variable(Matrix<Scalar> value) {
    return push(std::move(value), true, nullptr);
  }

  // Records a derived node. It needs a gradient iff any parent does.
  Var<Scalar> record(Matrix<Scalar> value, std::initializer_list<Var<Scalar>> parents,
                     Backward backward) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || nodes_[p.id()].needs_grad;
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  Var<Scalar> record(Matrix<Scalar> value, const std::vector<Var<Scalar>>& parents,
                     Backward backward) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || nodes_[p.id()].needs_grad;
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  const Matrix<Scalar>& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix<Scalar>& grad(std::size_t id) const { return nodes_[id].grad; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  // Adds `g` into the gradient of node `id` if that node is differentiable.
  template <typename Expr>
  void accumulate(std::size_t id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  void backward(const Var<Scalar>& output) {
    if (output.rows() != 1 || output.cols() != 1) {
      throw ShapeError("backward() expects a 1x1 output, got " + std::to_string(output.rows()) +
                       "x" + std::to_string(output.cols()));
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    accumulate(output.id(), Matrix<Scalar>::Ones(1, 1));
    for (std::size_t id = output.id() + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.backward && n.grad.size() != 0) n.backward(*this, id);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<Scalar> value;
    Matrix<Scalar> grad;
    bool needs_grad = false;
    Backward backward;
  };

  Var<Scalar> push(Matrix<Scalar> value, bool needs_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Matrix<Scalar>(), needs_grad, std::move(backward)});
    return Var<Scalar>(this, nodes_.size() - 1);
  }

  std::deque<Node> nodes_;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <typename Scalar>
std::string shape(const Var<Scalar>& v) {
  return std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.cols() == b.rows(),
                  "matmul: " + detail::shape(a) + " * " + detail::shape(b));
  const auto ia = a.id(), ib = b.id();
  Matrix<Scalar> out = a.value() * b.value();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "add: " + detail::shape(a) + " + " + detail::shape(b));
  const auto ia = a.id(), ib = b.id();
  Matrix<Scalar> out = a.value() + b.value();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, t.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "sub: " + detail::shape(a) + " - " + detail::shape(b));
  const auto ia = a.id(), ib = b.id();
  Matrix<Scalar> out = a.value() - b.value();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, -t.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> cwise_mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "cwise_mul: " + detail::shape(a) + " .* " + detail::shape(b));
  const auto ia = a.id(), ib = b.id();
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.needs_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

// a + 1·bias, where bias is a 1×c row broadcast over all rows of a.
template <typename Scalar>
Var<Scalar> add_row(const Var<Scalar>& a, const Var<Scalar>& bias) {
  detail::require(bias.rows() == 1 && bias.cols() == a.cols(),
                  "add_row: " + detail::shape(a) + " + row " + detail::shape(bias));
  const auto ia = a.id(), ib = bias.id();
  Matrix<Scalar> out = a.value().rowwise() + bias.value().row(0);
  return a.tape()->record(std::move(out), {a, bias}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    t.accumulate(ia, t.grad(self));
    if (t.needs_grad(ib)) t.accumulate(ib, t.grad(self).colwise().sum());
  });
}

// Shared body of the elementwise activations: dy/dx is evaluated from (x, y).
template <typename Scalar, typename Fwd, typename Deriv>
Var<Scalar> unary(const Var<Scalar>& a, Fwd fwd, Deriv deriv) {
  const auto ia = a.id();
  Matrix<Scalar> out = a.value().unaryExpr(fwd);
  return a.tape()->record(std::move(out), {a}, [ia, deriv](Tape<Scalar>& t, std::size_t self) {
    const auto& x = t.value(ia);
    const auto& y = t.value(self);
    Matrix<Scalar> d(x.rows(), x.cols());
    for (Index i = 0; i < x.size(); ++i) d.data()[i] = deriv(x.data()[i], y.data()[i]);
    t.accumulate(ia, t.grad(self).cwiseProduct(d));
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  return unary(
      a, [](Scalar x) { return x > Scalar(0) ? x : Scalar(0); },
      [](Scalar x, Scalar) { return x > Scalar(0) ? Scalar(1) : Scalar(0); });
}

template <typename Scalar>
Var<Scalar> leaky_relu(const Var<Scalar>& a, Scalar slope) {
  return unary(
      a, [slope](Scalar x) { return x > Scalar(0) ? x : slope * x; },
      [slope](Scalar x, Scalar) { return x > Scalar(0) ? Scalar(1) : slope; });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& a) {
  return unary(
      a, [](Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); },
      [](Scalar, Scalar y) { return y * (Scalar(1) - y); });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& a) {
  return unary(
      a, [](Scalar x) { return std::tanh(x); },
      [](Scalar, Scalar y) { return Scalar(1) - y * y; });
}

template <typename Scalar>
Var<Scalar> one_minus(const Var<Scalar>& a) {
  const auto ia = a.id();
  Matrix<Scalar> out = (Scalar(1) - a.value().array()).matrix();
  return a.tape()->record(std::move(out), {a}, [ia](Tape<Scalar>& t, std::size_t self) {
    t.accumulate(ia, -t.grad(self));
  });
}

// A·x for a constant sparse A.
template <typename Scalar>
Var<Scalar> spmm(std::shared_ptr<const SparseMatrix<Scalar>> A, const Var<Scalar>& x) {
  detail::require(A->cols() == x.rows(), "spmm: sparse " + std::to_string(A->rows()) + "x" +
                                             std::to_string(A->cols()) + " * " +
                                             detail::shape(x));
  const auto ix = x.id();
  Matrix<Scalar> out = (*A) * x.value();
  return x.tape()->record(std::move(out), {x}, [A, ix](Tape<Scalar>& t, std::size_t self) {
    t.accumulate(ix, Matrix<Scalar>(A->transpose() * t.grad(self)));
  });
}

// out.row(k) = a.row(rows[k])
template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& a, std::shared_ptr<const std::vector<Index>> rows) {
  const Index m = static_cast<Index>(rows->size());
  Matrix<Scalar> out(m, a.cols());
  for (Index k = 0; k < m; ++k) {
    const Index r = (*rows)[static_cast<std::size_t>(k)];
    detail::require(r >= 0 && r < a.rows(), "gather_rows: index out of range");
    out.row(k) = a.value().row(r);
  }
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia, rows](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    Matrix<Scalar> acc = Matrix<Scalar>::Zero(t.value(ia).rows(), t.value(ia).cols());
    for (Index k = 0; k < g.rows(); ++k) acc.row((*rows)[static_cast<std::size_t>(k)]) += g.row(k);
    t.accumulate(ia, acc);
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts) {
  detail::require(!parts.empty(), "concat_cols: no inputs");
  const Index m = parts.front().rows();
  Index width = 0;
  for (const auto& p : parts) {
    detail::require(p.rows() == m, "concat_cols: row mismatch " + detail::shape(p));
    width += p.cols();
  }
  Matrix<Scalar> out(m, width);
  std::vector<std::pair<std::size_t, Index>> layout;
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    layout.emplace_back(p.id(), offset);
    offset += p.cols();
  }
  return parts.front().tape()->record(
      std::move(out), parts, [layout](Tape<Scalar>& t, std::size_t self) {
        const auto& g = t.grad(self);
        for (const auto& [id, off] : layout) {
          if (t.needs_grad(id)) t.accumulate(id, g.middleCols(off, t.value(id).cols()));
        }
      });
}

// Softmax of a column of scores within each segment.
template <typename Scalar>
Var<Scalar> segment_softmax(const Var<Scalar>& scores, std::shared_ptr<const Segments> seg) {
  detail::require(scores.cols() == 1 && static_cast<std::size_t>(scores.rows()) == seg->ids.size(),
                  "segment_softmax: scores " + detail::shape(scores));
  const auto& s = scores.value();
  const auto nseg = static_cast<std::size_t>(seg->count);
  std::vector<Scalar> peak(nseg, -std::numeric_limits<Scalar>::infinity());
  std::vector<Scalar> total(nseg, Scalar(0));
  for (Index k = 0; k < s.rows(); ++k) {
    auto g = static_cast<std::size_t>(seg->ids[static_cast<std::size_t>(k)]);
    peak[g] = std::max(peak[g], s(k, 0));
  }
  Matrix<Scalar> out(s.rows(), 1);
  for (Index k = 0; k < s.rows(); ++k) {
    auto g = static_cast<std::size_t>(seg->ids[static_cast<std::size_t>(k)]);
    out(k, 0) = std::exp(s(k, 0) - peak[g]);
    total[g] += out(k, 0);
  }
  for (Index k = 0; k < s.rows(); ++k) {
    out(k, 0) /= total[static_cast<std::size_t>(seg->ids[static_cast<std::size_t>(k)])];
  }
  const auto is = scores.id();
  return scores.tape()->record(std::move(out), {scores}, [is, seg](Tape<Scalar>& t, std::size_t self) {
    const auto& y = t.value(self);
    const auto& g = t.grad(self);
    std::vector<Scalar> dot(static_cast<std::size_t>(seg->count), Scalar(0));
    for (Index k = 0; k < y.rows(); ++k) {
      dot[static_cast<std::size_t>(seg->ids[static_cast<std::size_t>(k)])] += g(k, 0) * y(k, 0);
    }
    Matrix<Scalar> d(y.rows(), 1);
    for (Index k = 0; k < y.rows(); ++k) {
      d(k, 0) = y(k, 0) * (g(k, 0) - dot[static_cast<std::size_t>(seg->ids[static_cast<std::size_t>(k)])]);
    }
    t.accumulate(is, d);
  });
}

// out.row(k) = weights(k) * a.row(k)
template <typename Scalar>
Var<Scalar> scale_rows(const Var<Scalar>& a, const Var<Scalar>& weights) {
  detail::require(weights.cols() == 1 && weights.rows() == a.rows(),
                  "scale_rows: " + detail::shape(a) + " by " + detail::shape(weights));
  const auto ia = a.id(), iw = weights.id();
  Matrix<Scalar> out = a.value().array().colwise() * weights.value().col(0).array();
  return a.tape()->record(std::move(out), {a, weights}, [ia, iw](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(ia)) {
      t.accumulate(ia, Matrix<Scalar>(g.array().colwise() * t.value(iw).col(0).array()));
    }
    if (t.needs_grad(iw)) {
      t.accumulate(iw, Matrix<Scalar>(g.cwiseProduct(t.value(ia)).rowwise().sum()));
    }
  });
}

// Row sums per segment; empty segments yield zero rows.
template <typename Scalar>
Var<Scalar> segment_sum(const Var<Scalar>& a, std::shared_ptr<const Segments> seg) {
  detail::require(static_cast<std::size_t>(a.rows()) == seg->ids.size(),
                  "segment_sum: rows " + detail::shape(a));
  Matrix<Scalar> out = Matrix<Scalar>::Zero(seg->count, a.cols());
  for (Index k = 0; k < a.rows(); ++k) out.row(seg->ids[static_cast<std::size_t>(k)]) += a.value().row(k);
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia, seg](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    Matrix<Scalar> d(static_cast<Index>(seg->ids.size()), g.cols());
    for (Index k = 0; k < d.rows(); ++k) d.row(k) = g.row(seg->ids[static_cast<std::size_t>(k)]);
    t.accumulate(ia, d);
  });
}

// Row means per segment; empty segments yield zero rows.
template <typename Scalar>
Var<Scalar> segment_mean(const Var<Scalar>& a, std::shared_ptr<const Segments> seg) {
  auto sizes = seg->sizes();
  Matrix<Scalar> inv(seg->count, 1);
  for (Index g = 0; g < seg->count; ++g) {
    auto c = sizes[static_cast<std::size_t>(g)];
    inv(g, 0) = c > 0 ? Scalar(1) / static_cast<Scalar>(c) : Scalar(0);
  }
  auto sums = segment_sum(a, seg);
  return scale_rows(sums, a.tape()->constant(std::move(inv)));
}

// Per-row L1 distance Σ_c |a(k,c) − b(k,c)| as a column.
template <typename Scalar>
Var<Scalar> l1_rows(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "l1_rows: " + detail::shape(a) + " vs " + detail::shape(b));
  Matrix<Scalar> out = (a.value() - b.value()).cwiseAbs().rowwise().sum();
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const Matrix<Scalar> sign = (t.value(ia) - t.value(ib)).unaryExpr([](Scalar x) {
      return x > Scalar(0) ? Scalar(1) : (x < Scalar(0) ? Scalar(-1) : Scalar(0));
    });
    const Matrix<Scalar> d = sign.array().colwise() * t.grad(self).col(0).array();
    t.accumulate(ia, d);
    t.accumulate(ib, -d);
  });
}

// Σ_k max(x_k + margin, 0) as a 1×1 value.
template <typename Scalar>
Var<Scalar> hinge_sum(const Var<Scalar>& x, Scalar margin) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = (x.value().array() + margin).max(Scalar(0)).sum();
  const auto ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix, margin](Tape<Scalar>& t, std::size_t self) {
    const Scalar g = t.grad(self)(0, 0);
    Matrix<Scalar> d = (t.value(ix).array() + margin > Scalar(0)).template cast<Scalar>() * g;
    t.accumulate(ix, d);
  });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia](Tape<Scalar>& t, std::size_t self) {
    t.accumulate(ia, Matrix<Scalar>::Constant(t.value(ia).rows(), t.value(ia).cols(),
                                              t.grad(self)(0, 0)));
  });
}

}  // namespace ad
}  // namespace otiea
