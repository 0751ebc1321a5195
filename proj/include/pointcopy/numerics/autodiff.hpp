#pragma once

// Tape-based reverse-mode differentiation over Tensor2 values.
//
// A Graph is built forward by calling the free op functions below; each op
// appends one node holding its value and a closure that scatters the node's
// gradient into its parents. backward() walks the tape in reverse and finally
// adds leaf gradients into the bound Param::grad buffers.
//
// A Graph is single-threaded. Independent graphs share nothing except the
// read-only Param values they were built from.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "pointcopy/numerics/tensor.hpp"

namespace pointcopy::ad {

struct Var {
  std::size_t id = std::numeric_limits<std::size_t>::max();
};

class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t self)>;

  Var constant(Tensor2 value);
  // Borrows `value`, which must outlive the graph.
  Var constant_ref(const Tensor2& value);
  // Borrows p.value; backward() accumulates into p.grad.
  Var param(Param& p);

  // Used by op implementations. The node requires a gradient when any parent does.
  Var push(Tensor2 value, std::initializer_list<Var> parents, Backward backward);

  const Tensor2& value(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.borrowed ? *n.borrowed : n.value;
  }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  // Gradient buffer, allocated on first access.
  Tensor2& grad(Var v);
  bool has_grad(Var v) const { return !nodes_.at(v.id).grad.empty(); }

  // `loss` must be 1x1. Param gradients are accumulated (+=), scaled by `seed`.
  void backward(Var loss, double seed = 1.0);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    Backward backward;
    Param* param = nullptr;
    const Tensor2* borrowed = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// y = x W (+ b); b is 1 x cols(W)
Var linear(Graph& g, Var x, Var w);
Var linear(Graph& g, Var x, Var w, Var b);
// a b^T
Var matmul_nt(Graph& g, Var a, Var b);
Var add(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var scale(Graph& g, Var a, double s);
Var softmax_rows(Graph& g, Var x);
Var layernorm(Graph& g, Var x, Var gamma, Var beta);
Var gelu(Graph& g, Var x);
// Multi-head causal self-attention on pre-projected q, k, v (T x D each).
// When `probs` is non-null it receives `heads` T x T weight matrices.
Var causal_attention(Graph& g, Var q, Var k, Var v, std::size_t heads,
                     std::vector<Tensor2>* probs = nullptr);
Var gather_rows(Graph& g, Var table, std::span<const std::size_t> rows);
Var concat_rows(Graph& g, Var a, Var b);
Var concat_cols(Graph& g, Var a, Var b);
// 1x1 sum / mean of all entries
Var sum_all(Graph& g, Var a);
Var mean_all(Graph& g, Var a);

}  // namespace pointcopy::ad
