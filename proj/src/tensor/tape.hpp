#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tensor/tensor.hpp"

namespace schedsyn::tensor {

using NodeId = int32_t;
inline constexpr NodeId kNoNode = -1;

// Reverse-mode tape. Nodes are created in forward order; backward walks ids
// in reverse, which is a valid reverse topological order by construction.
// One tape records one forward pass; build a new one per step.
class Tape {
 public:
  // `sample_offset` is the index of this tape's first sample within the full
  // logical batch, so stochastic ops (dropout) key off global sample indices
  // and results do not depend on how a batch was chunked across tapes.
  explicit Tape(int64_t sample_offset = 0) : sample_offset_(sample_offset) {}

  // Generation-only tapes skip gradient bookkeeping entirely.
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }

  // Leaves.
  NodeId value(Tensor v);                  // constant input
  NodeId input(Tensor v);                  // leaf that wants a gradient
  NodeId param(const Tensor* external);    // shared read-only parameter

  const Tensor& val(NodeId id) const { return node_value(id); }
  // Scalar value at full precision: reductions record their double
  // accumulator, scalar arithmetic propagates it. Falls back to the float
  // value for non-reduction nodes.
  double val64(NodeId id) const;
  const Tensor& grad(NodeId id) const;

  // Elementwise and shape ops.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId affine(NodeId x, float scale, float shift);
  NodeId exp(NodeId x);
  NodeId sum(NodeId x);   // scalar; accumulates in double
  NodeId mean(NodeId x);  // scalar; accumulates in double
  NodeId reshape(NodeId x, std::vector<int> shape);
  NodeId concat_last(NodeId a, NodeId b);
  NodeId slice_last(NodeId x, int from, int to);
  // T equal-shape (B,F) steps -> (B,T,F).
  NodeId stack_steps(const std::vector<NodeId>& steps);
  // (B,T,F) at step t -> (B,F).
  NodeId slice_step(NodeId x, int t);

  // Layers.
  NodeId linear(NodeId x, NodeId w, NodeId b = kNoNode);
  NodeId embedding(const IntArray& tokens, NodeId table);
  NodeId leaky_relu(NodeId x, float slope);
  NodeId sigmoid(NodeId x);
  NodeId softmax_last(NodeId x);
  NodeId conv1d(NodeId x, NodeId w, NodeId b, int stride, int pad);
  NodeId deconv1d(NodeId x, NodeId w, NodeId b, int stride, int pad, int out_pad);
  // Normalizes over all but the last axis. In training mode updates the
  // running stats in place; in eval mode it is an affine map using them.
  NodeId batchnorm(NodeId x, NodeId gamma, NodeId beta, Tensor& running_mean,
                   Tensor& running_var, bool train, float momentum, float eps);
  // Inverted dropout; the mask is a pure function of (key_base, global sample
  // index, element index) and is recomputed in backward.
  NodeId dropout(NodeId x, float p, uint64_t key_base, bool train);
  // Fused step. x (B,In), h (B,H), c (B,H), w (In+H,4H), bias (4H); returns a
  // (B,2H) node whose rows are [h' | c']. Gate order: input, forget, cell,
  // output.
  NodeId lstm_cell(NodeId x, NodeId h, NodeId c, NodeId w, NodeId bias);
  // Scalar: -mean(log p[target]) over every row of the leading axes.
  NodeId cross_entropy_probs(NodeId probs, const IntArray& targets);

  void backward(NodeId loss);
  bool backward_done() const { return backward_done_; }
  int64_t sample_offset() const { return sample_offset_; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    double scalar64 = 0.0;
    bool has_scalar64 = false;
    bool needs_grad = false;
    bool grad_alloc = false;
    std::function<void(Tape&, const Tensor&)> back;

    const Tensor& value() const { return external ? *external : owned; }
  };

  const Tensor& node_value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value(); }
  bool wants(NodeId id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }
  // Gradient buffer, zero-initialised on first touch.
  Tensor& gbuf(NodeId id);
  NodeId push(Tensor value, std::vector<NodeId> parents,
              std::function<void(Tape&, const Tensor&)> back);
  void mark_scalar64(NodeId id, double v) {
    nodes_[static_cast<size_t>(id)].scalar64 = v;
    nodes_[static_cast<size_t>(id)].has_scalar64 = true;
  }

  std::vector<Node> nodes_;
  int64_t sample_offset_ = 0;
  bool backward_done_ = false;
  bool grad_enabled_ = true;
};

// Output length of a stride/pad/kernel conv over `len` inputs, floored at 1
// so degenerate short sequences stay representable.
int conv1d_out_len(int len, int kernel, int stride, int pad);

// Picks (pad, out_pad) so a stride-2, kernel-4 deconvolution maps `in_len`
// to exactly `target_len`.
struct DeconvGeometry {
  int pad = 1;
  int out_pad = 0;
};
DeconvGeometry deconv1d_geometry(int in_len, int target_len, int kernel, int stride);

// Row-wise argmax over the last axis; ties resolve to the lowest index.
std::vector<int> argmax_last(const Tensor& t);

}  // namespace schedsyn::tensor
