#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "afford/tensor.hpp"

namespace afford {

// Value types shared by every stage of the pipeline. All of them are immutable
// after construction and safe to share across concurrent readers; the only
// computation here is invariant validation.

struct ImageTensor {
  std::size_t height = 0;
  std::size_t width = 0;
  Tensor pixels;  // H x W x 3, values in [0, 1]
};

enum class MaskMode {
  kGroundtruthGray,  // grayscale intensities in [0, 255]
  kScaled,           // intensities / 255, in [0, 1]
  kPrediction,       // model probabilities in [0, 1]
};

struct AffordanceMask {
  std::size_t height = 0;
  std::size_t width = 0;
  Tensor values;  // H x W
  MaskMode mode = MaskMode::kGroundtruthGray;
  std::size_t class_id = 0;  // affordance category index
};

// Image-encoder output: L pre-fusion feature grids plus the global summary
// vector; the fused grid is filled in by the fusion stage.
struct PatchFeatureMap {
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  std::vector<Tensor> layer_stack;  // L grids, each (grid_h*grid_w) x D_v
  Tensor cls;                       // 1 x D_v
  Tensor fused;                     // (grid_h*grid_w) x D_t; empty before fusion
};

struct PromptContext {
  Tensor vectors;  // p x D_e
  bool trainable = true;

  std::size_t length() const { return vectors.numel() == 0 ? 0 : vectors.rows(); }
};

enum class TextKind { kAffordance, kObject };

struct TextFeatureSet {
  Tensor features;  // K x D_t, rows unit-norm
  TextKind kind = TextKind::kAffordance;
  std::vector<std::string> class_names;
};

struct LabelSpace {
  std::vector<std::string> affordance_names;
  std::vector<std::string> object_names;
  std::map<std::string, std::size_t> object_of_image;  // sample id -> object index

  std::size_t num_affordances() const { return affordance_names.size(); }
  std::size_t num_objects() const { return object_names.size(); }
  void validate() const;
};

struct Hyperparams {
  double tau1 = 0.01;
  double tau2 = 0.01;
  double lambda1 = 0.01;
  double lambda2 = 1.0;
  double lr = 0.01;
  double momentum = 0.0;
  int iterations = 500;
  std::size_t patch_size = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Sample {
  std::string id;
  ImageTensor image;
  std::vector<AffordanceMask> masks;  // one per annotated affordance class
  std::size_t object_class = 0;
};

// Returns the sample unchanged when every invariant holds; throws otherwise.
// num_affordances/num_objects bound the class indices; patch_size checks the
// divisibility contract.
const Sample& validate(const Sample& sample, std::size_t num_affordances,
                       std::size_t num_objects, std::size_t patch_size);

// Eq-level mask rescaling: grayscale [0,255] -> [0,1]. Input mode must be
// kGroundtruthGray.
AffordanceMask scale_mask(const AffordanceMask& m);

}  // namespace afford
