#pragma once

#include <cstdint>
#include <memory>

#include "afford/core_types.hpp"

namespace afford {

// Frozen image encoder: image -> L patch-feature grids plus a global summary
// vector. Outputs are plain tensors (no gradient flows into the image or the
// encoder weights).
class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;
  virtual std::size_t patch_size() const = 0;
  virtual std::size_t feature_dim() const = 0;  // D_v
  virtual std::size_t num_layers() const = 0;   // L
  virtual PatchFeatureMap encode(const ImageTensor& image) const = 0;
};

// Deterministic desk-scale encoder. Each patch's layer-l feature is a fixed
// seeded affine map of (patch mean RGB, normalized patch coordinates,
// normalized layer index); the summary vector is a fixed seeded affine map of
// the global mean RGB. Smooth in the pixel values, local per patch, and
// color-discriminative so synthetic datasets that encode class identity in
// color are learnable end to end.
class StubImageEncoder final : public ImageEncoder {
 public:
  StubImageEncoder(std::uint64_t seed, std::size_t patch_size, std::size_t feature_dim,
                   std::size_t num_layers);

  std::size_t patch_size() const override { return patch_size_; }
  std::size_t feature_dim() const override { return feature_dim_; }
  std::size_t num_layers() const override { return num_layers_; }
  PatchFeatureMap encode(const ImageTensor& image) const override;

 private:
  std::size_t patch_size_;
  std::size_t feature_dim_;
  std::size_t num_layers_;
  Tensor patch_weight_;  // D_v x 6: mean r, g, b, row frac, col frac, layer frac
  Tensor patch_bias_;    // 1 x D_v
  Tensor cls_weight_;    // D_v x 3
  Tensor cls_bias_;      // 1 x D_v
};

PatchFeatureMap encode_image(const ImageTensor& image, const ImageEncoder& enc);

std::unique_ptr<ImageEncoder> stub_image_encoder(std::uint64_t seed, std::size_t patch_size,
                                                 std::size_t feature_dim,
                                                 std::size_t num_layers);

}  // namespace afford
