#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "afford/tensor.hpp"

namespace afford::ad {

// Reverse-mode automatic differentiation on a dynamically built tape.
//
// Each op allocates a Node holding the forward value and a closure that
// scatters the node's gradient into its parents. backward() runs the closures
// in reverse topological order. Graphs are rebuilt per forward pass; leaves
// are created fresh from parameter tensors, so gradients never need zeroing.

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated by backward(); same shape as value
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;  // reads this->grad, accumulates into parents
  bool requires_grad = false;

  double scalar() const {
    check(value.numel() == 1, "[ad::Node::scalar] node is not a scalar");
    return value[0];
  }
};

NodePtr constant(Tensor v);
NodePtr leaf(Tensor v);  // trainable: gradients are collected here

// Runs reverse-mode accumulation from a scalar root. After the call every
// reachable node with requires_grad has grad populated.
void backward(const NodePtr& root);

// ---- elementwise / broadcast ----
NodePtr add(const NodePtr& a, const NodePtr& b);              // same shape
NodePtr sub(const NodePtr& a, const NodePtr& b);              // same shape
NodePtr add_rowvec(const NodePtr& a, const NodePtr& b);       // (N x D) + (1 x D)
NodePtr scale(const NodePtr& a, double s);
NodePtr sigmoid(const NodePtr& a);
NodePtr gelu(const NodePtr& a);

// ---- linear algebra ----
NodePtr matmul(const NodePtr& a, const NodePtr& b);           // (m x k)(k x n)
NodePtr matmul_nt(const NodePtr& a, const NodePtr& b);        // (m x k)(n x k)^T -> m x n

// ---- structure ----
NodePtr concat_rows(const std::vector<NodePtr>& parts);
NodePtr slice_rows(const NodePtr& a, std::size_t r0, std::size_t r1);
NodePtr row(const NodePtr& a, std::size_t r);
NodePtr concat_cols(const std::vector<NodePtr>& parts);
NodePtr slice_cols(const NodePtr& a, std::size_t c0, std::size_t c1);
NodePtr reshape(const NodePtr& a, std::vector<std::size_t> shape);

// ---- reductions / normalization ----
NodePtr mean_rows(const NodePtr& a);                          // (N x D) -> (1 x D)
NodePtr masked_mean_rows(const NodePtr& a, const std::vector<std::size_t>& active);
NodePtr l2_normalize_rows(const NodePtr& a);
NodePtr softmax_rows(const NodePtr& a);

// ---- task-specific ----
// Knot-preserving bilinear upsampling of a (h x w) map to (out_h x out_w).
// Source coordinate of output pixel o is o / (out/in); input cell (i, j) is
// reproduced exactly at output (i*fy, j*fx) and the trailing fringe past the
// last knot replicates it.
NodePtr upsample_bilinear(const NodePtr& a, std::size_t out_h, std::size_t out_w);

// Cosine similarity of two (1 x D) vectors -> (1 x 1). Errors on zero norm.
NodePtr cosine(const NodePtr& a, const NodePtr& b);

// InfoNCE over K similarities (K x 1) with the given positive index, computed
// via the max-shifted log1p form so near-one softmax probabilities keep
// sub-denormal resolution. Always >= 0; exactly 0 for K == 1.
NodePtr infonce(const NodePtr& sims, std::size_t positive_index, double tau);

// Mean binary cross-entropy over C prediction maps against C targets of the
// same shape. Predictions are clamped to [eps, 1-eps], eps = 1e-7.
NodePtr bce(const std::vector<NodePtr>& preds, const std::vector<Tensor>& targets);

}  // namespace afford::ad
