#include "hml/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hml/constraint.hpp"
#include "hml/errors.hpp"

namespace hml {

Tape::NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Mat& Tape::ensure_grad(NodeId id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.v.empty()) n.grad = Mat(n.val.rows, n.val.cols);
  return n.grad;
}

Tape::NodeId Tape::leaf(const Mat& value) {
  Node n;
  n.op = Op::leaf;
  n.val = value;
  n.needs_grad = true;
  return push(std::move(n));
}

Tape::NodeId Tape::constant(const Mat& value) {
  Node n;
  n.op = Op::constant;
  n.val = value;
  return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  Node n;
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  n.val = hml::matmul(value(a), value(b));
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::add_row(NodeId a, NodeId bias) {
  const Mat& av = value(a);
  const Mat& bv = value(bias);
  if (bv.rows != 1 || bv.cols != av.cols)
    throw ShapeError("add_row: bias " + std::to_string(bv.rows) + "x" + std::to_string(bv.cols) +
                     " against " + std::to_string(av.rows) + "x" + std::to_string(av.cols));
  Node n;
  n.op = Op::add_row;
  n.a = a;
  n.b = bias;
  n.val = av;
  for (std::size_t r = 0; r < n.val.rows; ++r)
    for (std::size_t c = 0; c < n.val.cols; ++c) n.val(r, c) += bv.v[c];
  n.needs_grad = nodes_[a].needs_grad || nodes_[bias].needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId a) {
  Node n;
  n.op = Op::relu;
  n.a = a;
  n.val = value(a);
  for (double& x : n.val.v) x = std::max(x, 0.0);
  n.needs_grad = nodes_[a].needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::sigmoid(NodeId a) {
  Node n;
  n.op = Op::sigmoid;
  n.a = a;
  n.val = value(a);
  for (double& x : n.val.v) x = 1.0 / (1.0 + std::exp(-x));
  n.needs_grad = nodes_[a].needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  check_same_shape(value(a), value(b), "tape add");
  Node n;
  n.op = Op::add;
  n.a = a;
  n.b = b;
  n.val = value(a);
  for (std::size_t i = 0; i < n.val.v.size(); ++i) n.val.v[i] += value(b).v[i];
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::mul_const(NodeId a, const Mat& c) {
  check_same_shape(value(a), c, "tape mul_const");
  Node n;
  n.op = Op::mul_const;
  n.a = a;
  n.aux = c;
  n.val = hadamard(value(a), c);
  n.needs_grad = nodes_[a].needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, double s) {
  Node n;
  n.op = Op::scale;
  n.a = a;
  n.factor = s;
  n.val = value(a);
  for (double& x : n.val.v) x *= s;
  n.needs_grad = nodes_[a].needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::cm_max(NodeId a, const Hierarchy& h) {
  const Mat& in = value(a);
  if (in.cols != h.size())
    throw ShapeError("cm_max: " + std::to_string(in.cols) + " columns for " +
                     std::to_string(h.size()) + " nodes");
  Node n;
  n.op = Op::cm_max;
  n.a = a;
  n.hier = &h;
  n.val = Mat(in.rows, in.cols);
  n.arg.resize(in.rows * in.cols);
  for (std::size_t b = 0; b < in.rows; ++b) {
    const double* row = in.row_ptr(b);
    for (std::size_t i = 0; i < in.cols; ++i) {
      std::size_t best = h.descendants[i][0];
      double best_v = row[best];
      for (std::size_t idx = 1; idx < h.descendants[i].size(); ++idx) {
        const std::size_t j = h.descendants[i][idx];
        if (row[j] > best_v) {
          best_v = row[j];
          best = j;
        }
      }
      n.val(b, i) = best_v;
      n.arg[b * in.cols + i] = best;
    }
  }
  n.needs_grad = nodes_[a].needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::bce(NodeId p, const Mat& labels) {
  check_same_shape(value(p), labels, "tape bce");
  Node n;
  n.op = Op::bce;
  n.a = p;
  n.aux = labels;
  n.val = Mat(labels.rows, labels.cols);
  const Mat& pv = value(p);
  for (std::size_t i = 0; i < n.val.v.size(); ++i) {
    const double pc = std::clamp(pv.v[i], kProbEps, 1.0 - kProbEps);
    const double y = labels.v[i];
    n.val.v[i] = -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
  }
  n.needs_grad = nodes_[p].needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::mean(NodeId a) {
  Node n;
  n.op = Op::mean;
  n.a = a;
  n.val = Mat(1, 1);
  double acc = 0.0;
  for (double x : value(a).v) acc += x;
  n.val.v[0] = acc / static_cast<double>(value(a).v.size());
  n.needs_grad = nodes_[a].needs_grad;
  return push(std::move(n));
}

void Tape::backward(NodeId root) {
  Mat& seed = ensure_grad(root);
  std::fill(seed.v.begin(), seed.v.end(), 1.0);
  for (NodeId id = root; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.v.empty() || !n.needs_grad) continue;
    switch (n.op) {
      case Op::leaf:
      case Op::constant:
        break;
      case Op::matmul: {
        if (nodes_[n.a].needs_grad) {
          Mat da = matmul_nt(n.grad, value(n.b));
          Mat& g = ensure_grad(n.a);
          for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += da.v[i];
        }
        if (nodes_[n.b].needs_grad) {
          Mat db = matmul_tn(value(n.a), n.grad);
          Mat& g = ensure_grad(n.b);
          for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += db.v[i];
        }
        break;
      }
      case Op::add_row: {
        if (nodes_[n.a].needs_grad) {
          Mat& g = ensure_grad(n.a);
          for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += n.grad.v[i];
        }
        if (nodes_[n.b].needs_grad) {
          Mat& g = ensure_grad(n.b);
          for (std::size_t r = 0; r < n.grad.rows; ++r)
            for (std::size_t c = 0; c < n.grad.cols; ++c) g.v[c] += n.grad(r, c);
        }
        break;
      }
      case Op::relu: {
        Mat& g = ensure_grad(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i)
          if (n.val.v[i] > 0.0) g.v[i] += n.grad.v[i];
        break;
      }
      case Op::sigmoid: {
        Mat& g = ensure_grad(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i)
          g.v[i] += n.grad.v[i] * n.val.v[i] * (1.0 - n.val.v[i]);
        break;
      }
      case Op::add: {
        if (nodes_[n.a].needs_grad) {
          Mat& g = ensure_grad(n.a);
          for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += n.grad.v[i];
        }
        if (nodes_[n.b].needs_grad) {
          Mat& g = ensure_grad(n.b);
          for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += n.grad.v[i];
        }
        break;
      }
      case Op::mul_const: {
        Mat& g = ensure_grad(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += n.grad.v[i] * n.aux.v[i];
        break;
      }
      case Op::scale: {
        Mat& g = ensure_grad(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += n.grad.v[i] * n.factor;
        break;
      }
      case Op::cm_max: {
        Mat& g = ensure_grad(n.a);
        for (std::size_t b = 0; b < n.val.rows; ++b)
          for (std::size_t i = 0; i < n.val.cols; ++i)
            g(b, n.arg[b * n.val.cols + i]) += n.grad(b, i);
        break;
      }
      case Op::bce: {
        Mat& g = ensure_grad(n.a);
        const Mat& pv = value(n.a);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
          const double p = pv.v[i];
          if (p < kProbEps || p > 1.0 - kProbEps) continue;  // flat in the clamp
          g.v[i] += n.grad.v[i] * (p - n.aux.v[i]) / (p * (1.0 - p));
        }
        break;
      }
      case Op::mean: {
        Mat& g = ensure_grad(n.a);
        const double d = n.grad.v[0] / static_cast<double>(g.v.size());
        for (double& x : g.v) x += d;
        break;
      }
    }
  }
}

}  // namespace hml
