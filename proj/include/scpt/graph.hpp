#pragma once

#include <functional>
#include <vector>

#include "scpt/tensor.hpp"

namespace scpt {

using VarId = int;

// Reverse-mode tape over Tensor values. A Graph is built per forward pass:
// ops append nodes, backward() runs the tape in reverse and accumulates
// parameter gradients into the sinks registered via param(). Graphs are
// single-threaded; parallel callers build independent graphs.
class Graph {
 public:
  Graph() { nodes_.reserve(256); }

  // leaf without gradient
  VarId constant(Tensor v);
  // leaf whose gradient is accumulated into *grad_sink (same shape as v)
  VarId param(const Tensor& v, Tensor* grad_sink);

  const Tensor& val(VarId id) const { return nodes_[static_cast<size_t>(id)].val; }

  // --- elementwise / linear algebra ---
  VarId add(VarId a, VarId b);
  VarId sub(VarId a, VarId b);
  VarId mul(VarId a, VarId b);          // Hadamard
  VarId scale(VarId a, double k);
  VarId matmul(VarId a, VarId b);       // (m x k) * (k x n)
  VarId transpose(VarId a);
  VarId add_rowvec(VarId m, VarId r);   // (n x d) + broadcast (1 x d)
  VarId relu(VarId a);
  VarId gelu(VarId a);                  // exact erf form
  VarId softmax_rows(VarId a);
  VarId layernorm_rows(VarId x, VarId gain, VarId bias, double eps = 1e-5);

  // --- shape ops (rows = dim 0 of a matrix) ---
  VarId slice_rows(VarId a, int r0, int r1);
  VarId slice_cols(VarId a, int c0, int c1);
  VarId concat_rows(VarId a, VarId b);
  VarId concat_cols(const std::vector<VarId>& parts);
  VarId reshape(VarId a, std::vector<int> shape);

  // --- conv / norm over feature maps (C x H x W) ---
  VarId conv2d(VarId x, VarId w, VarId b, int stride, int pad);
  VarId instance_norm2d(VarId x, VarId gain, VarId bias, double eps = 1e-5);

  // --- reductions to 1x1 scalars ---
  VarId sum_abs(VarId a);               // entrywise L1
  VarId sum_sq(VarId a);                // squared Frobenius norm
  VarId mean_all(VarId a);
  VarId cross_entropy_logits(VarId logits, int label);  // logits 1 x K

  // Runs the tape in reverse from a scalar loss (seed dL/dL = seed) and
  // flushes parameter gradients into their sinks.
  void backward(VarId loss, double seed = 1.0);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor val;
    Tensor grad;          // lazily sized
    bool needs_grad = false;
    bool grad_live = false;
    Tensor* sink = nullptr;  // parameter gradient accumulator
    std::function<void(Graph&, Node&)> back;  // pulls from node.grad
  };

  Node& node(VarId id) { return nodes_[static_cast<size_t>(id)]; }
  Tensor& grad_of(VarId id);  // allocate-on-demand
  VarId push(Tensor val, bool needs_grad, std::function<void(Graph&, Node&)> back);
  bool wants(VarId id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }

  std::vector<Node> nodes_;
};

}  // namespace scpt
