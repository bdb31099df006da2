#ifndef HML_AUTODIFF_HPP
#define HML_AUTODIFF_HPP

#include <cstddef>
#include <vector>

#include "hml/hierarchy.hpp"
#include "hml/mat.hpp"

namespace hml {

/// Reverse-mode tape over matrix-valued nodes. Build a graph forward, then
/// call backward(root) once; gradients accumulate in creation-order reverse.
/// The tape owns all values and gradients; node ids are indices into it.
class Tape {
 public:
  using NodeId = int;

  /// Differentiable input (model parameter).
  NodeId leaf(const Mat& value);
  /// Non-differentiable input (data, labels, detached weights).
  NodeId constant(const Mat& value);

  NodeId matmul(NodeId a, NodeId b);
  /// Adds a 1×C bias row to every row of a B×C matrix.
  NodeId add_row(NodeId a, NodeId bias);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId add(NodeId a, NodeId b);
  /// Elementwise product with a constant (dropout masks, loss weights).
  NodeId mul_const(NodeId a, const Mat& c);
  NodeId scale(NodeId a, double s);
  /// Descendant-max per node column. Gradient flows to the argmax element
  /// only; ties go to the lowest node index.
  NodeId cm_max(NodeId a, const Hierarchy& h);
  /// Elementwise binary cross-entropy against constant labels, input clamped
  /// to [kProbEps, 1-kProbEps]. Gradient is zero inside the clamped region.
  NodeId bce(NodeId p, const Mat& labels);
  /// Mean over all elements, as a 1×1 node.
  NodeId mean(NodeId a);

  const Mat& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].val; }
  /// Zero-shaped until backward has run and the node participates.
  const Mat& grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  void backward(NodeId root);

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op { leaf, constant, matmul, add_row, relu, sigmoid, add, mul_const, scale, cm_max, bce, mean };

  struct Node {
    Op op;
    NodeId a = -1, b = -1;
    Mat val;
    Mat grad;
    Mat aux;                       // mul_const multiplier / bce labels
    std::vector<std::size_t> arg;  // cm_max routing
    const Hierarchy* hier = nullptr;
    double factor = 1.0;  // scale
    bool needs_grad = false;
  };

  NodeId push(Node n);
  Mat& ensure_grad(NodeId id);

  std::vector<Node> nodes_;
};

}  // namespace hml

#endif  // HML_AUTODIFF_HPP
