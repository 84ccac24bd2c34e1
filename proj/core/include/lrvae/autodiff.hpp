#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lrvae/tensor.hpp"

/// Define-by-run reverse-mode differentiation for small dense networks.
///
/// A Graph is built fresh for every step. Leaves are either constant inputs
/// or Parameters; every op appends one node whose value is computed eagerly.
/// backward() walks the node list in reverse, which is a valid topological
/// order because nodes can only reference earlier nodes.
namespace lrvae::ad {

/// A trainable tensor that outlives graphs.
struct Parameter {
  std::string name;
  Tensor value;
};

enum class OpKind : std::uint8_t {
  kInput,
  kParameter,
  kDense,
  kRelu,
  kAdd,
  kMul,
  kMulConstant,
  kScaleColumns,
  kScale,
  kExp,
  kGradientReversal,
  kPassThrough,
  kSoftmaxCrossEntropy,
  kMeanSquaredError,
  kGaussianKl,
  kSumSquares,
};

const char* op_name(OpKind kind) noexcept;

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

using GradientMap = std::unordered_map<const Parameter*, Tensor>;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Constant leaf; receives a gradient but never requires one.
  Var input(Tensor value);
  /// Trainable leaf bound to `param`. Binding the same parameter twice returns the same node.
  Var parameter(const Parameter& param);

  /// Reverse sweep from a size-1 root. Returns the gradient of every bound parameter.
  GradientMap backward(Var root);

  /// Gradient of any node after backward(); zeros when the node was unreached.
  const Tensor& gradient(Var v) const;

  std::size_t node_count() const noexcept { return nodes_.size(); }
  OpKind kind(Var v) const { return nodes_.at(v.id()).kind; }

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    // Per-op payload.
    Tensor aux;
    double scalar = 0.0;
    std::vector<int> labels;
    const Parameter* param = nullptr;
  };

  Var push(Node node);
  Node& node(Var v);
  const Node& node(Var v) const;
  void backprop_node(Node& n);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
  bool backward_done_ = false;

  friend const Tensor& Var::value() const;
  friend Var dense(Var, Var, Var);
  friend Var relu(Var);
  friend Var add(Var, Var);
  friend Var mul(Var, Var);
  friend Var mul_constant(Var, Tensor);
  friend Var scale_columns(Var, std::span<const double>);
  friend Var scale(Var, double);
  friend Var exp(Var);
  friend Var gradient_reversal(Var, double);
  friend Var pass_through(Var);
  friend Var softmax_cross_entropy(Var, std::span<const int>);
  friend Var mean_squared_error(Var, Var);
  friend Var gaussian_kl(Var, Var);
  friend Var sum_squares(std::span<const Var>, double);
};

/// input[B x I] * weights[I x O] + bias[O].
Var dense(Var input, Var weights, Var bias);
/// max(0, v); the subgradient at 0 is 0.
Var relu(Var x);
Var add(Var a, Var b);
/// Elementwise product of two same-shaped nodes.
Var mul(Var a, Var b);
/// Elementwise product with a constant of the same shape; no gradient flows into `c`.
Var mul_constant(Var x, Tensor c);
/// x[b, i] * factors[i] for a matrix x.
Var scale_columns(Var x, std::span<const double> factors);
Var scale(Var x, double factor);
Var exp(Var x);
/// Identity forward; backward multiplies the upstream gradient by -lambda.
Var gradient_reversal(Var x, double lambda);
/// Identity forward and backward.
Var pass_through(Var x);
/// Mean over rows of -log softmax(logits)[label]. Fused for stability.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);
/// Mean over all elements of (a - b)^2.
Var mean_squared_error(Var a, Var b);
/// Mean over rows of KL(N(mu, exp(log_var)) || N(0, I)).
Var gaussian_kl(Var mu, Var log_var);
/// coefficient * sum of squares of every element of every term.
Var sum_squares(std::span<const Var> terms, double coefficient);

}  // namespace lrvae::ad
