#include "afford/vision_branch.hpp"

#include "afford/rng.hpp"

namespace afford {

namespace {
// Keeps stub feature magnitudes a bit above unit scale; desk-scale training
// converges noticeably faster with stronger patch features. Biases stay small
// so no shared offset dominates the patch features.
constexpr double kFeatureScale = 2.0;
constexpr double kBiasScale = 0.25;
}  // namespace

StubImageEncoder::StubImageEncoder(std::uint64_t seed, std::size_t patch_size,
                                   std::size_t feature_dim, std::size_t num_layers)
    : patch_size_(patch_size), feature_dim_(feature_dim), num_layers_(num_layers) {
  check(patch_size >= 1, "[StubImageEncoder] patch size must be positive");
  check(feature_dim >= 1, "[StubImageEncoder] feature dimension must be positive");
  check(num_layers >= 1, "[StubImageEncoder] need at least one layer");
  Rng rng(derive_seed(seed, "image-encoder-affine"));
  patch_weight_ = Tensor(feature_dim, 6);
  for (double& v : patch_weight_.data()) v = rng.uniform(-kFeatureScale, kFeatureScale);
  patch_bias_ = Tensor(1, feature_dim);
  for (double& v : patch_bias_.data()) v = rng.uniform(-kBiasScale, kBiasScale);
  cls_weight_ = Tensor(feature_dim, 3);
  for (double& v : cls_weight_.data()) v = rng.uniform(-kFeatureScale, kFeatureScale);
  cls_bias_ = Tensor(1, feature_dim);
  for (double& v : cls_bias_.data()) v = rng.uniform(-kBiasScale, kBiasScale);
}

PatchFeatureMap StubImageEncoder::encode(const ImageTensor& image) const {
  check(image.height % patch_size_ == 0 && image.width % patch_size_ == 0,
        "[StubImageEncoder::encode] image dimensions must be divisible by the patch size");
  const std::size_t gh = image.height / patch_size_;
  const std::size_t gw = image.width / patch_size_;
  const std::size_t n = gh * gw;

  // Per-patch mean RGB.
  Tensor means(n, 3);
  const double inv_area = 1.0 / static_cast<double>(patch_size_ * patch_size_);
  for (std::size_t pi = 0; pi < gh; ++pi)
    for (std::size_t pj = 0; pj < gw; ++pj) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (std::size_t y = pi * patch_size_; y < (pi + 1) * patch_size_; ++y)
        for (std::size_t x = pj * patch_size_; x < (pj + 1) * patch_size_; ++x)
          for (std::size_t c = 0; c < 3; ++c) acc[c] += image.pixels.at3(y, x, c);
      for (std::size_t c = 0; c < 3; ++c) means.at(pi * gw + pj, c) = acc[c] * inv_area;
    }

  PatchFeatureMap out;
  out.grid_h = gh;
  out.grid_w = gw;
  out.layer_stack.reserve(num_layers_);
  // Inputs are centered so features come out near zero mean across typical
  // images; downstream logits then start in the live region of the sigmoid.
  for (std::size_t l = 0; l < num_layers_; ++l) {
    const double layer_frac =
        num_layers_ == 1 ? 0.0
                         : static_cast<double>(l) / static_cast<double>(num_layers_ - 1);
    Tensor grid(n, feature_dim_);
    for (std::size_t pi = 0; pi < gh; ++pi)
      for (std::size_t pj = 0; pj < gw; ++pj) {
        const std::size_t r = pi * gw + pj;
        const double in[6] = {means.at(r, 0) - 0.5,
                              means.at(r, 1) - 0.5,
                              means.at(r, 2) - 0.5,
                              static_cast<double>(pi) / static_cast<double>(gh) - 0.5,
                              static_cast<double>(pj) / static_cast<double>(gw) - 0.5,
                              layer_frac - 0.5};
        for (std::size_t k = 0; k < feature_dim_; ++k) {
          double v = patch_bias_[k];
          for (std::size_t m = 0; m < 6; ++m) v += patch_weight_.at(k, m) * in[m];
          grid.at(r, k) = v;
        }
      }
    out.layer_stack.push_back(std::move(grid));
  }

  double global[3] = {0.0, 0.0, 0.0};
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < 3; ++c) global[c] += means.at(r, c);
  for (double& g : global) g = g / static_cast<double>(n) - 0.5;
  out.cls = Tensor(1, feature_dim_);
  for (std::size_t k = 0; k < feature_dim_; ++k) {
    double v = cls_bias_[k];
    for (std::size_t m = 0; m < 3; ++m) v += cls_weight_.at(k, m) * global[m];
    out.cls[k] = v;
  }
  return out;
}

PatchFeatureMap encode_image(const ImageTensor& image, const ImageEncoder& enc) {
  PatchFeatureMap out = enc.encode(image);
  check(!out.layer_stack.empty(), "[encode_image] encoder produced no layers");
  const std::size_t n = out.grid_h * out.grid_w;
  check(out.grid_h == image.height / enc.patch_size() &&
            out.grid_w == image.width / enc.patch_size(),
        "[encode_image] grid shape does not match image / patch size");
  for (const Tensor& g : out.layer_stack) {
    check(g.rows() == n && g.cols() == enc.feature_dim(),
          "[encode_image] layer grid has wrong shape");
    check(g.all_finite(), "[encode_image] non-finite layer feature");
  }
  check(out.cls.numel() == enc.feature_dim() && out.cls.all_finite(),
        "[encode_image] bad summary vector");
  return out;
}

std::unique_ptr<ImageEncoder> stub_image_encoder(std::uint64_t seed, std::size_t patch_size,
                                                 std::size_t feature_dim,
                                                 std::size_t num_layers) {
  return std::make_unique<StubImageEncoder>(seed, patch_size, feature_dim, num_layers);
}

}  // namespace afford
