#include "lrvae/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "lrvae/errors.hpp"

namespace lrvae::ad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::RowVectorXd>;

ConstMatrixMap as_matrix(const Tensor& t) {
  return ConstMatrixMap(t.data(), static_cast<Eigen::Index>(t.shape()[0]),
                        static_cast<Eigen::Index>(t.shape()[1]));
}

MatrixMap as_matrix(Tensor& t) {
  return MatrixMap(t.data(), static_cast<Eigen::Index>(t.shape()[0]),
                   static_cast<Eigen::Index>(t.shape()[1]));
}

void require_same_graph(Var a, Var b) {
  if (&a.graph() != &b.graph()) throw ContractError("operands belong to different graphs");
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + format_shape(a.shape()) +
                         " does not match " + format_shape(b.shape()));
  }
}

void add_into(Tensor& acc, std::span<const double> g) {
  auto dst = acc.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

}  // namespace

const char* op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParameter: return "parameter";
    case OpKind::kDense: return "dense";
    case OpKind::kRelu: return "relu";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kMulConstant: return "mul_constant";
    case OpKind::kScaleColumns: return "scale_columns";
    case OpKind::kScale: return "scale";
    case OpKind::kExp: return "exp";
    case OpKind::kGradientReversal: return "gradient_reversal";
    case OpKind::kPassThrough: return "pass_through";
    case OpKind::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
    case OpKind::kMeanSquaredError: return "mean_squared_error";
    case OpKind::kGaussianKl: return "gaussian_kl";
    case OpKind::kSumSquares: return "sum_squares";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph_->node(*this).value; }

Graph::Node& Graph::node(Var v) { return nodes_.at(v.id()); }
const Graph::Node& Graph::node(Var v) const { return nodes_.at(v.id()); }

Var Graph::push(Node n) {
  if (backward_done_) throw ContractError("graph is frozen after backward()");
  for (std::size_t in : n.inputs) n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::input(Tensor value) {
  Node n{.kind = OpKind::kInput, .inputs = {}, .value = std::move(value), .grad = {}};
  return push(std::move(n));
}

Var Graph::parameter(const Parameter& param) {
  if (auto it = bound_.find(&param); it != bound_.end()) return Var(this, it->second);
  Node n{.kind = OpKind::kParameter, .inputs = {}, .value = param.value, .grad = {}};
  n.requires_grad = true;
  n.param = &param;
  Var v = push(std::move(n));
  bound_.emplace(&param, v.id());
  return v;
}

const Tensor& Graph::gradient(Var v) const {
  if (!backward_done_) throw ContractError("gradient() before backward()");
  return node(v).grad;
}

GradientMap Graph::backward(Var root) {
  if (&root.graph() != this) throw ContractError("backward root belongs to another graph");
  if (backward_done_) throw ContractError("backward() already ran on this graph");
  if (root.value().size() != 1) {
    throw ContractError("backward root must be scalar, got shape " + format_shape(root.shape()));
  }
  backward_done_ = true;
  for (auto& n : nodes_) n.grad = Tensor::zeros(n.value.shape());
  nodes_[root.id()].grad[0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.inputs.empty()) continue;
    backprop_node(n);
  }
  GradientMap grads;
  for (const auto& [param, id] : bound_) grads.emplace(param, nodes_[id].grad);
  return grads;
}

void Graph::backprop_node(Node& n) {
  const Tensor& up = n.grad;
  auto wants = [&](std::size_t k) -> Node* {
    Node& in = nodes_[n.inputs[k]];
    return in.requires_grad ? &in : nullptr;
  };

  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kParameter:
      return;
    case OpKind::kDense: {
      Node& x = nodes_[n.inputs[0]];
      Node& w = nodes_[n.inputs[1]];
      ConstMatrixMap dy = as_matrix(up);
      if (x.requires_grad) as_matrix(x.grad).noalias() += dy * as_matrix(w.value).transpose();
      if (w.requires_grad) as_matrix(w.grad).noalias() += as_matrix(x.value).transpose() * dy;
      if (Node* b = wants(2)) {
        Eigen::Map<Eigen::RowVectorXd> db(b->grad.data(), static_cast<Eigen::Index>(b->grad.size()));
        db.noalias() += dy.colwise().sum();
      }
      return;
    }
    case OpKind::kRelu: {
      if (Node* x = wants(0)) {
        auto g = x->grad.values();
        auto v = x->value.values();
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (v[i] > 0.0) g[i] += up[i];
        }
      }
      return;
    }
    case OpKind::kAdd: {
      if (Node* a = wants(0)) add_into(a->grad, up.values());
      if (Node* b = wants(1)) add_into(b->grad, up.values());
      return;
    }
    case OpKind::kMul: {
      Node& a = nodes_[n.inputs[0]];
      Node& b = nodes_[n.inputs[1]];
      if (a.requires_grad) {
        for (std::size_t i = 0; i < up.size(); ++i) a.grad[i] += up[i] * b.value[i];
      }
      if (b.requires_grad) {
        for (std::size_t i = 0; i < up.size(); ++i) b.grad[i] += up[i] * a.value[i];
      }
      return;
    }
    case OpKind::kMulConstant: {
      if (Node* x = wants(0)) {
        for (std::size_t i = 0; i < up.size(); ++i) x->grad[i] += up[i] * n.aux[i];
      }
      return;
    }
    case OpKind::kScaleColumns: {
      if (Node* x = wants(0)) {
        const std::size_t cols = n.aux.size();
        for (std::size_t i = 0; i < up.size(); ++i) x->grad[i] += up[i] * n.aux[i % cols];
      }
      return;
    }
    case OpKind::kScale: {
      if (Node* x = wants(0)) {
        for (std::size_t i = 0; i < up.size(); ++i) x->grad[i] += up[i] * n.scalar;
      }
      return;
    }
    case OpKind::kExp: {
      if (Node* x = wants(0)) {
        for (std::size_t i = 0; i < up.size(); ++i) x->grad[i] += up[i] * n.value[i];
      }
      return;
    }
    case OpKind::kGradientReversal: {
      if (Node* x = wants(0)) {
        for (std::size_t i = 0; i < up.size(); ++i) x->grad[i] += -n.scalar * up[i];
      }
      return;
    }
    case OpKind::kPassThrough: {
      if (Node* x = wants(0)) add_into(x->grad, up.values());
      return;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      if (Node* x = wants(0)) {
        // aux holds the softmax probabilities.
        const std::size_t rows = n.aux.shape()[0];
        const std::size_t cols = n.aux.shape()[1];
        const double g = up[0] / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            const double target = static_cast<int>(c) == n.labels[r] ? 1.0 : 0.0;
            x->grad(r, c) += g * (n.aux(r, c) - target);
          }
        }
      }
      return;
    }
    case OpKind::kMeanSquaredError: {
      Node& a = nodes_[n.inputs[0]];
      Node& b = nodes_[n.inputs[1]];
      const double g = 2.0 * up[0] / static_cast<double>(a.value.size());
      for (std::size_t i = 0; i < a.value.size(); ++i) {
        const double d = g * (a.value[i] - b.value[i]);
        if (a.requires_grad) a.grad[i] += d;
        if (b.requires_grad) b.grad[i] -= d;
      }
      return;
    }
    case OpKind::kGaussianKl: {
      Node& mu = nodes_[n.inputs[0]];
      Node& lv = nodes_[n.inputs[1]];
      const double g = up[0] / static_cast<double>(mu.value.shape()[0]);
      for (std::size_t i = 0; i < mu.value.size(); ++i) {
        if (mu.requires_grad) mu.grad[i] += g * mu.value[i];
        if (lv.requires_grad) lv.grad[i] += g * 0.5 * (std::exp(lv.value[i]) - 1.0);
      }
      return;
    }
    case OpKind::kSumSquares: {
      const double g = 2.0 * n.scalar * up[0];
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        if (Node* x = wants(k)) {
          for (std::size_t i = 0; i < x->value.size(); ++i) x->grad[i] += g * x->value[i];
        }
      }
      return;
    }
  }
}

Var dense(Var input, Var weights, Var bias) {
  require_same_graph(input, weights);
  require_same_graph(input, bias);
  const Tensor& x = input.value();
  const Tensor& w = weights.value();
  const Tensor& b = bias.value();
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1 || x.shape()[1] != w.shape()[0] ||
      b.shape()[0] != w.shape()[1]) {
    throw DimensionError("dense: input " + format_shape(x.shape()) + " with weights " +
                         format_shape(w.shape()) + " and bias " + format_shape(b.shape()));
  }
  Tensor out = Tensor::zeros({x.shape()[0], w.shape()[1]});
  auto y = as_matrix(out);
  y.noalias() = as_matrix(x) * as_matrix(w);
  y.rowwise() += ConstVectorMap(b.data(), static_cast<Eigen::Index>(b.size()));
  Graph& g = input.graph();
  return g.push({.kind = OpKind::kDense,
                 .inputs = {input.id(), weights.id(), bias.id()},
                 .value = std::move(out),
                 .grad = {}});
}

Var relu(Var x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return x.graph().push({.kind = OpKind::kRelu, .inputs = {x.id()}, .value = std::move(out), .grad = {}});
}

Var add(Var a, Var b) {
  require_same_graph(a, b);
  require_same_shape("add", a, b);
  Tensor out = a.value();
  add_into(out, b.value().values());
  return a.graph().push(
      {.kind = OpKind::kAdd, .inputs = {a.id(), b.id()}, .value = std::move(out), .grad = {}});
}

Var mul(Var a, Var b) {
  require_same_graph(a, b);
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.graph().push(
      {.kind = OpKind::kMul, .inputs = {a.id(), b.id()}, .value = std::move(out), .grad = {}});
}

Var mul_constant(Var x, Tensor c) {
  if (x.shape() != c.shape()) {
    throw DimensionError("mul_constant: shape " + format_shape(x.shape()) + " does not match " +
                         format_shape(c.shape()));
  }
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
  return x.graph().push({.kind = OpKind::kMulConstant,
                         .inputs = {x.id()},
                         .value = std::move(out),
                         .grad = {},
                         .requires_grad = false,
                         .aux = std::move(c)});
}

Var scale_columns(Var x, std::span<const double> factors) {
  if (x.value().rank() != 2 || x.shape()[1] != factors.size()) {
    throw DimensionError("scale_columns: input " + format_shape(x.shape()) + " with " +
                         std::to_string(factors.size()) + " factors");
  }
  Tensor out = x.value();
  const std::size_t cols = factors.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factors[i % cols];
  return x.graph().push({.kind = OpKind::kScaleColumns,
                         .inputs = {x.id()},
                         .value = std::move(out),
                         .grad = {},
                         .requires_grad = false,
                         .aux = Tensor::vector(std::vector<double>(factors.begin(), factors.end()))});
}

Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (double& v : out.values()) v *= factor;
  return x.graph().push({.kind = OpKind::kScale,
                         .inputs = {x.id()},
                         .value = std::move(out),
                         .grad = {},
                         .requires_grad = false,
                         .aux = {},
                         .scalar = factor});
}

Var exp(Var x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = std::exp(v);
  return x.graph().push({.kind = OpKind::kExp, .inputs = {x.id()}, .value = std::move(out), .grad = {}});
}

Var gradient_reversal(Var x, double lambda) {
  if (!std::isfinite(lambda)) throw ValidationError("gradient_reversal: lambda must be finite");
  return x.graph().push({.kind = OpKind::kGradientReversal,
                         .inputs = {x.id()},
                         .value = x.value(),
                         .grad = {},
                         .requires_grad = false,
                         .aux = {},
                         .scalar = lambda});
}

Var pass_through(Var x) {
  return x.graph().push(
      {.kind = OpKind::kPassThrough, .inputs = {x.id()}, .value = x.value(), .grad = {}});
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = logits.value();
  if (z.rank() != 2 || z.shape()[0] != labels.size()) {
    throw DimensionError("softmax_cross_entropy: logits " + format_shape(z.shape()) + " with " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t rows = z.shape()[0];
  const std::size_t cols = z.shape()[1];
  Tensor probs = Tensor::zeros(z.shape());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= cols) {
      throw IndexError("softmax_cross_entropy: label " + std::to_string(label) + " at row " +
                       std::to_string(r) + " outside [0, " + std::to_string(cols) + ")");
    }
    auto row = z.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      probs(r, c) = std::exp(row[c] - peak);
      denom += probs(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) probs(r, c) /= denom;
    loss += std::log(denom) - (row[static_cast<std::size_t>(label)] - peak);
  }
  loss /= static_cast<double>(rows);
  return logits.graph().push({.kind = OpKind::kSoftmaxCrossEntropy,
                              .inputs = {logits.id()},
                              .value = Tensor::scalar(loss),
                              .grad = {},
                              .requires_grad = false,
                              .aux = std::move(probs),
                              .scalar = 0.0,
                              .labels = std::vector<int>(labels.begin(), labels.end())});
}

Var mean_squared_error(Var a, Var b) {
  require_same_graph(a, b);
  require_same_shape("mean_squared_error", a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    const double d = a.value()[i] - b.value()[i];
    total += d * d;
  }
  total /= static_cast<double>(a.value().size());
  return a.graph().push({.kind = OpKind::kMeanSquaredError,
                         .inputs = {a.id(), b.id()},
                         .value = Tensor::scalar(total),
                         .grad = {}});
}

Var gaussian_kl(Var mu, Var log_var) {
  require_same_graph(mu, log_var);
  require_same_shape("gaussian_kl", mu, log_var);
  if (mu.value().rank() != 2) throw DimensionError("gaussian_kl: expected [B x D] posterior");
  double total = 0.0;
  for (std::size_t i = 0; i < mu.value().size(); ++i) {
    const double m = mu.value()[i];
    const double lv = log_var.value()[i];
    total += -0.5 * (1.0 + lv - m * m - std::exp(lv));
  }
  total /= static_cast<double>(mu.shape()[0]);
  return mu.graph().push({.kind = OpKind::kGaussianKl,
                          .inputs = {mu.id(), log_var.id()},
                          .value = Tensor::scalar(total),
                          .grad = {}});
}

Var sum_squares(std::span<const Var> terms, double coefficient) {
  if (terms.empty()) throw ContractError("sum_squares: no terms");
  std::vector<std::size_t> inputs;
  double total = 0.0;
  for (Var t : terms) {
    require_same_graph(terms[0], t);
    inputs.push_back(t.id());
    for (double v : t.value().values()) total += v * v;
  }
  return terms[0].graph().push({.kind = OpKind::kSumSquares,
                                .inputs = std::move(inputs),
                                .value = Tensor::scalar(coefficient * total),
                                .grad = {},
                                .requires_grad = false,
                                .aux = {},
                                .scalar = coefficient});
}

}  // namespace lrvae::ad
