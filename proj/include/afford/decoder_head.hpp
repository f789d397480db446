#pragma once

#include <cstdint>
#include <vector>

#include "afford/autodiff.hpp"
#include "afford/core_types.hpp"

namespace afford {

// Cross-attention decoder guided by the visual summary token, plus the mask
// prediction head.
//
// Per layer: queries are the text rows; keys/values are the fused patch
// features with the projected summary vector appended as one extra slot.
// Residual connections wrap both the attention block and the feed-forward
// block; there is no normalization between layers, only a final row-wise L2
// normalization of the output. Each query row is processed independently, so
// the decoder is equivariant to relabeling the text rows and invariant to
// permuting the patch order.
struct DecoderLayerParams {
  Tensor wq, wk, wv, wo;  // D_t x D_t each, bias-free
  Tensor w1, b1;          // D_t x d_ff, 1 x d_ff
  Tensor w2, b2;          // d_ff x D_t, 1 x D_t
};

struct DecoderParams {
  std::vector<DecoderLayerParams> layers;
  Tensor cls_inject;  // D_v x D_t, projects the summary token into the memory
  std::size_t n_heads = 1;

  std::size_t n_layers() const { return layers.size(); }
  std::size_t feature_dim() const { return cls_inject.cols(); }
};

// Xavier-uniform projections, zero FF biases. d_ff = 2 * D_t.
DecoderParams init_decoder(std::uint64_t seed, std::size_t d_v, std::size_t d_t,
                           std::size_t n_layers, std::size_t n_heads);

struct DecoderLeaves {
  std::vector<std::vector<ad::NodePtr>> layers;  // per layer: wq wk wv wo w1 b1 w2 b2
  ad::NodePtr cls_inject;
};

DecoderLeaves decoder_leaves(const DecoderParams& params);

// text (C x D_t), patches (N x D_t), cls (1 x D_v) -> class-aware rows
// (C x D_t), unit-normalized.
ad::NodePtr decode_node(const ad::NodePtr& text, const ad::NodePtr& patches,
                        const ad::NodePtr& cls, const DecoderLeaves& leaves,
                        std::size_t n_heads);

// Per class c: sigmoid(<F_v(i,j), text row c>) on the patch grid, then
// knot-preserving bilinear upsampling to (out_h x out_w); outputs stay
// strictly inside (0, 1).
std::vector<ad::NodePtr> predict_masks_node(const ad::NodePtr& patches,
                                            const ad::NodePtr& class_text, std::size_t grid_h,
                                            std::size_t grid_w, std::size_t out_h,
                                            std::size_t out_w);

// Value-level wrappers.
TextFeatureSet decode(const TextFeatureSet& text, const Tensor& patches, const Tensor& cls,
                      const DecoderParams& params);
std::vector<AffordanceMask> predict_masks(const Tensor& patches, const TextFeatureSet& text,
                                          std::size_t grid_h, std::size_t grid_w,
                                          std::size_t out_h, std::size_t out_w);

}  // namespace afford
