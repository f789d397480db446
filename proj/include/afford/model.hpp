#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "afford/autodiff.hpp"
#include "afford/core_types.hpp"
#include "afford/decoder_head.hpp"
#include "afford/fusion.hpp"
#include "afford/losses.hpp"
#include "afford/text_branch.hpp"
#include "afford/vision_branch.hpp"

namespace afford {

struct ModelDims {
  std::size_t d_e = 16;             // token embedding dimension
  std::size_t d_v = 16;             // image encoder feature dimension
  std::size_t d_t = 16;             // shared text / fused feature dimension
  std::size_t encoder_layers = 4;   // L grids entering fusion
  std::size_t prompt_length = 8;    // learnable context vectors
  std::size_t decoder_layers = 2;
  std::size_t decoder_heads = 1;
};

struct LossToggles {
  bool enable_ami = true;
  bool enable_omi = true;
  // Alignment target for the affordance term: decoder output (default) or the
  // encoder-output text features.
  bool ami_on_encoder_features = false;
  // When set, object prompts also receive the learnable context prefix.
  bool object_prompt_context = false;
};

// Every trainable parameter of the system. The two frozen encoders live
// outside; the summary-token projection used by the object alignment term is
// dedicated and trainable.
struct ModelParams {
  ModelDims dims;
  PromptContext ctx;      // prompt_length x d_e
  FusionParams fusion;
  DecoderParams decoder;
  Tensor omi_projection;  // d_v x d_t
};

ModelParams init_model(std::uint64_t seed, const ModelDims& dims);

// Deterministic named traversal of every trainable tensor; the single source
// of order for SGD, checkpoints and gradient checks.
void visit_params(ModelParams& p,
                  const std::function<void(const std::string&, Tensor&)>& fn);
void visit_params(const ModelParams& p,
                  const std::function<void(const std::string&, const Tensor&)>& fn);

// Per-sample constants reused across iterations: scaled BCE targets for every
// class (zeros where unannotated) and the active patch cells of each annotated
// affordance region (empty regions recorded and skipped by the alignment
// term).
struct SampleTargets {
  std::vector<Tensor> scaled;  // C maps, H x W
  struct Region {
    std::size_t class_id;
    std::vector<std::size_t> cells;
  };
  std::vector<Region> regions;
};

SampleTargets prepare_targets(const Sample& sample, std::size_t num_affordances,
                              std::size_t patch_size);

struct ForwardResult {
  std::vector<std::string> leaf_names;  // registry order
  std::vector<ad::NodePtr> leaves;
  ad::NodePtr affordance_text;  // F_t, unit rows
  ad::NodePtr class_aware_text;
  ad::NodePtr patches;          // fused grid
  std::vector<ad::NodePtr> masks;
  ad::NodePtr total;
  LossReport report;
};

// Builds the full differentiable graph for one sample. `object_text` carries
// the precomputed (constant) object prototypes; it is ignored when
// object_prompt_context is set, in which case the object branch is rebuilt
// against the live context.
ForwardResult model_forward(const ModelParams& params, const Sample& sample,
                            const SampleTargets& targets, const PatchFeatureMap& vision,
                            const Tensor& object_text, const LabelSpace& labels,
                            const TextEncoder& text_enc, const TextEncoder& object_enc,
                            const Hyperparams& hp, const LossToggles& toggles);

// Inference path: per-class probability maps at image resolution.
std::vector<Tensor> predict_sample(const ModelParams& params, const PatchFeatureMap& vision,
                                   std::size_t out_h, std::size_t out_w,
                                   const LabelSpace& labels, const TextEncoder& text_enc);

// Object prototypes for the default fixed-prompt branch.
Tensor object_text_features(const LabelSpace& labels, const TextEncoder& object_enc);

}  // namespace afford
