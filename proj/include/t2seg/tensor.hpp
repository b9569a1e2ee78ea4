// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "t2seg/errors.hpp"

namespace t2seg {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

template <typename Scalar>
class Graph;

namespace detail {

template <typename Scalar>
struct Node {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool requires_grad = false;
  bool leaf = true;
  // Pushes this node's grad into its parents. Parents are held by the closure.
  std::function<void(Node&)> backward;
};

template <typename Scalar>
Graph<Scalar>*& active_graph() {
  thread_local Graph<Scalar>* graph = nullptr;
  return graph;
}

}  // namespace detail

inline std::string shape_string(Index rows, Index cols) {
  std::ostringstream os;
  os << "[" << rows << "x" << cols << "]";
  return os.str();
}

/// Dense 2-D tensor handle with an optional gradient accumulator.
///
/// Copies share the underlying storage; use clone() for a deep copy. Vectors
/// are stored as 1 x d rows.
template <typename Scalar>
class Tensor {
 public:
  using MatrixType = Matrix<Scalar>;

  Tensor() = default;

  explicit Tensor(MatrixType value, bool requires_grad = false)
      : node_(std::make_shared<detail::Node<Scalar>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
    if (requires_grad) node_->grad = MatrixType::Zero(rows(), cols());
  }

  static Tensor zeros(Index rows, Index cols, bool requires_grad = false) {
    return Tensor(MatrixType::Zero(rows, cols), requires_grad);
  }

  static Tensor scalar(Scalar v, bool requires_grad = false) {
    MatrixType m(1, 1);
    m(0, 0) = v;
    return Tensor(std::move(m), requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index size() const { return node_->value.size(); }
  std::vector<Index> shape() const { return {rows(), cols()}; }
  std::string shape_str() const { return shape_string(rows(), cols()); }

  const MatrixType& value() const { return node_->value; }
  /// Writable storage; only meaningful for leaves (parameters, inputs).
  MatrixType& mutable_value() { return node_->value; }
  Scalar item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape_str());
    return node_->value(0, 0);
  }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }
  bool has_grad() const { return node_->grad.size() == size(); }

  /// Gradient accumulator; zeros when nothing has been accumulated yet.
  MatrixType grad() const {
    if (has_grad()) return node_->grad;
    return MatrixType::Zero(rows(), cols());
  }
  MatrixType& mutable_grad() {
    if (!has_grad()) node_->grad = MatrixType::Zero(rows(), cols());
    return node_->grad;
  }
  void zero_grad() {
    if (node_->requires_grad) node_->grad.setZero(rows(), cols());
  }

  Tensor clone() const {
    Tensor t(node_->value, node_->requires_grad);
    return t;
  }

  /// Value-only copy that never records gradients.
  Tensor detach() const { return Tensor(node_->value, false); }

  const std::shared_ptr<detail::Node<Scalar>>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node<Scalar>> node_;
};

/// Ordered record of executed operations. Activate with a Recording guard; ops
/// executed while no graph is active do not record gradients.
template <typename Scalar>
class Graph {
 public:
  using NodePtr = std::shared_ptr<detail::Node<Scalar>>;

  void push(NodePtr node) { tape_.push_back(std::move(node)); }
  std::size_t size() const { return tape_.size(); }
  void clear() { tape_.clear(); }

  /// Reverse sweep from a scalar loss. Leaf gradients accumulate across calls;
  /// intermediate gradients are reset first.
  void backward(const Tensor<Scalar>& loss) {
    if (loss.rows() != 1 || loss.cols() != 1) {
      throw ContractError("backward requires a scalar loss, got " + loss.shape_str());
    }
    for (auto& n : tape_) n->grad.resize(0, 0);
    auto& root = *loss.node();
    if (!root.requires_grad) return;
    if (root.grad.size() != 1) root.grad = Matrix<Scalar>::Zero(1, 1);
    root.grad(0, 0) += Scalar(1);
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
      auto& n = **it;
      if (n.grad.size() == 0 || !n.backward) continue;
      n.backward(n);
    }
  }

 private:
  std::vector<NodePtr> tape_;
};

/// Makes `graph` the active recorder for the current thread while in scope.
template <typename Scalar>
class Recording {
 public:
  explicit Recording(Graph<Scalar>& graph) : previous_(detail::active_graph<Scalar>()) {
    detail::active_graph<Scalar>() = &graph;
  }
  ~Recording() { detail::active_graph<Scalar>() = previous_; }
  Recording(const Recording&) = delete;
  Recording& operator=(const Recording&) = delete;

 private:
  Graph<Scalar>* previous_;
};

namespace detail {

template <typename Scalar, typename Derived>
void accumulate(Node<Scalar>& n, const Eigen::MatrixBase<Derived>& g) {
  if (!n.requires_grad) return;
  // Gradient expressions never read the target's own grad, so products can
  // write straight into it.
  if (n.grad.size() == 0) {
    n.grad.noalias() = g;
  } else {
    n.grad.noalias() += g;
  }
}

template <typename Scalar>
bool any_requires_grad(std::initializer_list<const Tensor<Scalar>*> inputs) {
  for (const auto* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

/// Wraps `value` as the output of an op. Records `fn` on the active graph when
/// any input needs a gradient.
template <typename Scalar, typename Fn>
Tensor<Scalar> make_result(Matrix<Scalar> value,
                           std::initializer_list<const Tensor<Scalar>*> inputs, Fn&& fn) {
  Tensor<Scalar> out(std::move(value), false);
  Graph<Scalar>* graph = active_graph<Scalar>();
  if (graph != nullptr && any_requires_grad<Scalar>(inputs)) {
    auto& node = *out.node();
    node.requires_grad = true;
    node.leaf = false;
    node.backward = std::forward<Fn>(fn);
    graph->push(out.node());
  }
  return out;
}

}  // namespace detail

}  // namespace t2seg
