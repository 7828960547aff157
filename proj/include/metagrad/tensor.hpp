#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "metagrad/error.hpp"

namespace metagrad {

// The seven primitives the MLP stack is built from. Everything else
// (forward passes, losses) is a composition of these.
enum class Op : std::uint8_t {
  kLeaf,
  kMatmul,
  kAddBias,
  kRelu,
  kTanh,
  kMseLoss,
  kSoftmaxCrossEntropy,
  kScalarEval,
};

namespace detail {

struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // sized by backward(); empty until then
  Op op = Op::kLeaf;
  std::vector<std::shared_ptr<TensorNode>> inputs;
};

inline std::size_t element_count(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace detail

inline std::string shape_string(std::span<const std::size_t> shape) {
  if (shape.empty()) return "[scalar]";
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += " x ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Handle to a node in a gradient graph. Values are immutable once built;
// graphs are rebuilt for every forward pass. backward() fills `grad` on every
// node reachable from the loss. The graph is acyclic by construction (inputs
// always exist before the node that consumes them).
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(std::vector<std::size_t> shape, std::vector<double> values) {
    if (values.size() != detail::element_count(shape)) {
      throw ShapeError("leaf tensor " + shape_string(shape) + " expects " +
                       std::to_string(detail::element_count(shape)) +
                       " values, got " + std::to_string(values.size()));
    }
    auto node = std::make_shared<detail::TensorNode>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    return Tensor(std::move(node));
  }

  static Tensor scalar(double v) { return leaf({}, {v}); }

  static Tensor zeros(std::vector<std::size_t> shape) {
    std::vector<double> values(detail::element_count(shape), 0.0);
    return leaf(std::move(shape), std::move(values));
  }

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return require().shape; }
  const std::vector<double>& values() const { return require().values; }
  const std::vector<double>& grad() const { return require().grad; }
  Op op() const { return require().op; }
  std::size_t size() const { return require().values.size(); }
  std::size_t rank() const { return require().shape.size(); }

  double value() const {
    const auto& n = require();
    if (!n.shape.empty()) {
      throw ShapeError("value() requires a scalar, got " + shape_string(n.shape));
    }
    return n.values[0];
  }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

  detail::TensorNode& require() const {
    if (!node_) throw ValueError("operation on an empty tensor");
    return *node_;
  }

  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor apply_primitive(Op, std::span<const Tensor>);
  friend void backward(const Tensor&);
};

namespace detail {

inline void check_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " expects rank-" + std::to_string(rank) +
                     " input, got " + shape_string(t.shape()));
  }
}

inline double row_log_sum_exp(const double* row, std::size_t n, double& max_out) {
  double m = row[0];
  for (std::size_t j = 1; j < n; ++j) m = std::max(m, row[j]);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] - m);
  max_out = m;
  return m + std::log(s);
}

}  // namespace detail

// Builds one primitive node. Shape and argument validation happens here;
// the convenience wrappers below just forward to this.
inline Tensor apply_primitive(Op kind, std::span<const Tensor> inputs) {
  auto arity = [&](std::size_t n) {
    if (inputs.size() != n) {
      throw ValueError("primitive expects " + std::to_string(n) +
                       " inputs, got " + std::to_string(inputs.size()));
    }
    for (const Tensor& t : inputs) {
      if (!t.defined()) throw ValueError("primitive input is an empty tensor");
    }
  };

  auto node = std::make_shared<detail::TensorNode>();
  node->op = kind;

  switch (kind) {
    case Op::kLeaf:
      throw ValueError("kLeaf is not an applicable primitive; use Tensor::leaf");

    case Op::kMatmul: {
      arity(2);
      const Tensor& a = inputs[0];
      const Tensor& b = inputs[1];
      detail::check_rank(a, 2, "matmul");
      detail::check_rank(b, 2, "matmul");
      const std::size_t m = a.shape()[0], p = a.shape()[1];
      const std::size_t p2 = b.shape()[0], n = b.shape()[1];
      if (p != p2) {
        throw ShapeError("matmul inner dimensions disagree: " +
                         shape_string(a.shape()) + " vs " + shape_string(b.shape()));
      }
      node->shape = {m, n};
      node->values.assign(m * n, 0.0);
      const auto& av = a.values();
      const auto& bv = b.values();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < p; ++k) acc += av[i * p + k] * bv[k * n + j];
          node->values[i * n + j] = acc;
        }
      }
      break;
    }

    case Op::kAddBias: {
      arity(2);
      const Tensor& x = inputs[0];
      const Tensor& b = inputs[1];
      detail::check_rank(x, 2, "add_bias");
      detail::check_rank(b, 1, "add_bias bias");
      const std::size_t m = x.shape()[0], n = x.shape()[1];
      if (b.shape()[0] != n) {
        throw ShapeError("add_bias width mismatch: " + shape_string(x.shape()) +
                         " vs " + shape_string(b.shape()));
      }
      node->shape = {m, n};
      node->values.resize(m * n);
      const auto& xv = x.values();
      const auto& bv = b.values();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          node->values[i * n + j] = xv[i * n + j] + bv[j];
      break;
    }

    case Op::kRelu: {
      arity(1);
      node->shape = inputs[0].shape();
      node->values = inputs[0].values();
      for (double& v : node->values) v = v > 0.0 ? v : 0.0;
      break;
    }

    case Op::kTanh: {
      arity(1);
      node->shape = inputs[0].shape();
      node->values = inputs[0].values();
      for (double& v : node->values) v = std::tanh(v);
      break;
    }

    case Op::kMseLoss: {
      arity(2);
      const Tensor& pred = inputs[0];
      const Tensor& target = inputs[1];
      if (pred.shape() != target.shape()) {
        throw ShapeError("mse_loss shape mismatch: " + shape_string(pred.shape()) +
                         " vs " + shape_string(target.shape()));
      }
      if (pred.size() == 0) throw ValueError("mse_loss on empty tensors");
      double acc = 0.0;
      const auto& pv = pred.values();
      const auto& tv = target.values();
      for (std::size_t i = 0; i < pv.size(); ++i) {
        const double d = pv[i] - tv[i];
        acc += d * d;
      }
      node->shape = {};
      node->values = {acc / static_cast<double>(pv.size())};
      break;
    }

    case Op::kSoftmaxCrossEntropy: {
      arity(2);
      const Tensor& logits = inputs[0];
      const Tensor& labels = inputs[1];
      detail::check_rank(logits, 2, "softmax_cross_entropy");
      detail::check_rank(labels, 1, "softmax_cross_entropy labels");
      const std::size_t m = logits.shape()[0], c = logits.shape()[1];
      if (labels.shape()[0] != m) {
        throw ShapeError("softmax_cross_entropy batch mismatch: " +
                         shape_string(logits.shape()) + " vs " +
                         shape_string(labels.shape()));
      }
      if (m == 0 || c == 0) throw ValueError("softmax_cross_entropy on empty batch");
      const auto& lv = logits.values();
      const auto& yv = labels.values();
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double raw = yv[i];
        if (raw != std::floor(raw) || raw < 0.0 || raw >= static_cast<double>(c)) {
          throw ValueError("label " + std::to_string(raw) + " outside [0, " +
                           std::to_string(c) + ") at row " + std::to_string(i));
        }
        double mx = 0.0;
        const double lse = detail::row_log_sum_exp(&lv[i * c], c, mx);
        acc += lse - lv[i * c + static_cast<std::size_t>(raw)];
      }
      node->shape = {};
      node->values = {acc / static_cast<double>(m)};
      break;
    }

    case Op::kScalarEval: {
      arity(1);
      if (inputs[0].size() != 1) {
        throw ShapeError("scalar_eval expects exactly one element, got " +
                         shape_string(inputs[0].shape()));
      }
      node->shape = {};
      node->values = {inputs[0].values()[0]};
      break;
    }
  }

  node->inputs.reserve(inputs.size());
  for (const Tensor& t : inputs) node->inputs.push_back(t.node_);
  return Tensor(std::move(node));
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const Tensor in[] = {a, b};
  return apply_primitive(Op::kMatmul, in);
}

inline Tensor add_bias(const Tensor& x, const Tensor& b) {
  const Tensor in[] = {x, b};
  return apply_primitive(Op::kAddBias, in);
}

inline Tensor relu(const Tensor& x) {
  const Tensor in[] = {x};
  return apply_primitive(Op::kRelu, in);
}

inline Tensor tanh(const Tensor& x) {
  const Tensor in[] = {x};
  return apply_primitive(Op::kTanh, in);
}

inline Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  const Tensor in[] = {pred, target};
  return apply_primitive(Op::kMseLoss, in);
}

inline Tensor softmax_cross_entropy(const Tensor& logits, const Tensor& labels) {
  const Tensor in[] = {logits, labels};
  return apply_primitive(Op::kSoftmaxCrossEntropy, in);
}

inline Tensor scalar_eval(const Tensor& x) {
  const Tensor in[] = {x};
  return apply_primitive(Op::kScalarEval, in);
}

namespace detail {

// Accumulates d(loss)/d(input) into the inputs of `node`, given node.grad.
inline void accumulate_input_grads(TensorNode& node) {
  switch (node.op) {
    case Op::kLeaf:
      break;

    case Op::kMatmul: {
      TensorNode& a = *node.inputs[0];
      TensorNode& b = *node.inputs[1];
      const std::size_t m = a.shape[0], p = a.shape[1], n = b.shape[1];
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < p; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            acc += node.grad[i * n + j] * b.values[k * n + j];
          a.grad[i * p + k] += acc;
        }
      }
      for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i)
            acc += a.values[i * p + k] * node.grad[i * n + j];
          b.grad[k * n + j] += acc;
        }
      }
      break;
    }

    case Op::kAddBias: {
      TensorNode& x = *node.inputs[0];
      TensorNode& b = *node.inputs[1];
      const std::size_t m = x.shape[0], n = x.shape[1];
      for (std::size_t i = 0; i < m * n; ++i) x.grad[i] += node.grad[i];
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += node.grad[i * n + j];
        b.grad[j] += acc;
      }
      break;
    }

    case Op::kRelu: {
      TensorNode& x = *node.inputs[0];
      // Subgradient at exactly 0 is taken as 0.
      for (std::size_t i = 0; i < x.values.size(); ++i)
        if (x.values[i] > 0.0) x.grad[i] += node.grad[i];
      break;
    }

    case Op::kTanh: {
      TensorNode& x = *node.inputs[0];
      for (std::size_t i = 0; i < x.values.size(); ++i) {
        const double y = node.values[i];
        x.grad[i] += (1.0 - y * y) * node.grad[i];
      }
      break;
    }

    case Op::kMseLoss: {
      TensorNode& pred = *node.inputs[0];
      TensorNode& target = *node.inputs[1];
      const double g = node.grad[0];
      const double inv_n = 1.0 / static_cast<double>(pred.values.size());
      for (std::size_t i = 0; i < pred.values.size(); ++i) {
        const double d = 2.0 * (pred.values[i] - target.values[i]) * inv_n * g;
        pred.grad[i] += d;
        target.grad[i] -= d;
      }
      break;
    }

    case Op::kSoftmaxCrossEntropy: {
      TensorNode& logits = *node.inputs[0];
      TensorNode& labels = *node.inputs[1];
      const std::size_t m = logits.shape[0], c = logits.shape[1];
      const double g = node.grad[0] / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) {
        double mx = 0.0;
        const double lse = row_log_sum_exp(&logits.values[i * c], c, mx);
        const auto y = static_cast<std::size_t>(labels.values[i]);
        for (std::size_t j = 0; j < c; ++j) {
          const double p = std::exp(logits.values[i * c + j] - lse);
          logits.grad[i * c + j] += g * (p - (j == y ? 1.0 : 0.0));
        }
      }
      // Labels are discrete; they receive no gradient.
      (void)labels;
      break;
    }

    case Op::kScalarEval: {
      node.inputs[0]->grad[0] += node.grad[0];
      break;
    }
  }
}

}  // namespace detail

// Reverse-mode sweep from a scalar loss. Gradients of every node reachable
// from `loss` are reset and recomputed; unreachable tensors are untouched.
inline void backward(const Tensor& loss) {
  if (!loss.defined()) throw ValueError("backward on an empty tensor");
  detail::TensorNode* root = loss.node_.get();
  if (!root->shape.empty()) {
    throw ShapeError("backward requires a scalar loss, got " + shape_string(root->shape));
  }

  // Iterative post-order DFS; the reversed order is a valid topological order.
  std::vector<detail::TensorNode*> order;
  std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
  std::unordered_set<const detail::TensorNode*> seen;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::TensorNode* child = node->inputs[next++].get();
      if (seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::TensorNode* n : order) n->grad.assign(n->values.size(), 0.0);
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    detail::accumulate_input_grads(**it);
}

}  // namespace metagrad
