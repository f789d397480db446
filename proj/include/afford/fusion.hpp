#pragma once

#include <cstdint>
#include <vector>

#include "afford/autodiff.hpp"
#include "afford/core_types.hpp"

namespace afford {

// Trainable multi-layer fusion: softmax-mixed sum over the L encoder layers
// followed by a single linear projection into the text feature dimension.
// The mixing strategy is named in configs ("softmax_linear") so alternatives
// can be added without changing the stored-parameter contract.
struct FusionParams {
  Tensor layer_logits;  // 1 x L; softmax gives the mixing coefficients
  Tensor projection;    // D_v x D_t
  Tensor bias;          // 1 x D_t

  std::size_t num_layers() const { return layer_logits.cols(); }
};

// Uniform mixing (zero logits), projection ~ uniform(-a, a) with
// a = sqrt(6 / (D_v + D_t)), zero bias.
FusionParams init_fusion(std::uint64_t seed, std::size_t d_v, std::size_t d_t,
                         std::size_t num_layers);

// Normalized mixing coefficients (softmax of the logits).
std::vector<double> mixing_coefficients(const FusionParams& params);

// Graph form: layer grids enter as constants, parameters through the given
// leaf nodes. Output is (N x D_t).
ad::NodePtr fuse_node(const std::vector<Tensor>& layer_stack, const ad::NodePtr& logits,
                      const ad::NodePtr& projection, const ad::NodePtr& bias);

// Value form: fills PatchFeatureMap::fused.
Tensor fuse(const std::vector<Tensor>& layer_stack, const FusionParams& params);

}  // namespace afford
