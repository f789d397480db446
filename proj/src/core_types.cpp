#include "afford/core_types.hpp"

#include <set>
#include <string>

namespace afford {

namespace {

void check_mask_range(const AffordanceMask& m) {
  double lo = 0.0, hi = 1.0;
  if (m.mode == MaskMode::kGroundtruthGray) hi = 255.0;
  for (double v : m.values.data())
    check(v >= lo && v <= hi,
          "[validate] mask value " + std::to_string(v) + " outside declared mode range");
}

}  // namespace

void LabelSpace::validate() const {
  std::set<std::string> seen;
  for (const auto& n : affordance_names) {
    check(!n.empty(), "[LabelSpace] empty affordance name");
    check(seen.insert("a:" + n).second, "[LabelSpace] duplicate affordance name: " + n);
  }
  for (const auto& n : object_names) {
    check(!n.empty(), "[LabelSpace] empty object name");
    check(seen.insert("o:" + n).second, "[LabelSpace] duplicate object name: " + n);
  }
  for (const auto& [id, obj] : object_of_image)
    check(obj < object_names.size(), "[LabelSpace] sample '" + id + "' maps to unknown object");
}

void Hyperparams::validate() const {
  check(tau1 > 0.0 && tau2 > 0.0, "[Hyperparams] temperatures must be positive");
  check(lambda1 >= 0.0 && lambda2 >= 0.0, "[Hyperparams] loss weights must be nonnegative");
  check(lr > 0.0, "[Hyperparams] learning rate must be positive");
  check(momentum >= 0.0 && momentum < 1.0, "[Hyperparams] momentum must be in [0, 1)");
  check(iterations >= 1, "[Hyperparams] iteration count must be positive");
  check(patch_size >= 1, "[Hyperparams] patch size must be positive");
}

const Sample& validate(const Sample& sample, std::size_t num_affordances,
                       std::size_t num_objects, std::size_t patch_size) {
  const ImageTensor& img = sample.image;
  check(img.height > 0 && img.width > 0, "[validate] empty image");
  check(img.pixels.ndim() == 3 && img.pixels.size(0) == img.height &&
            img.pixels.size(1) == img.width && img.pixels.size(2) == 3,
        "[validate] pixel array does not match declared H x W x 3");
  check(patch_size > 0 && img.height % patch_size == 0 && img.width % patch_size == 0,
        "[validate] image dimensions must be divisible by the patch size");
  for (double v : img.pixels.data())
    check(v >= 0.0 && v <= 1.0, "[validate] pixel value outside [0, 1]");

  check(sample.object_class < num_objects, "[validate] unknown object class index");
  for (const AffordanceMask& m : sample.masks) {
    check(m.height == img.height && m.width == img.width,
          "[validate] mask shape does not match the image");
    check(m.values.ndim() == 2 && m.values.rows() == m.height && m.values.cols() == m.width,
          "[validate] mask value array does not match declared shape");
    check(m.class_id < num_affordances, "[validate] unknown affordance class index");
    check_mask_range(m);
  }
  return sample;
}

AffordanceMask scale_mask(const AffordanceMask& m) {
  check(m.mode == MaskMode::kGroundtruthGray,
        "[scale_mask] input mask must be in grayscale ground-truth mode");
  AffordanceMask out = m;
  out.mode = MaskMode::kScaled;
  for (double& v : out.values.data()) v /= 255.0;
  return out;
}

}  // namespace afford
