#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "afford/autodiff.hpp"
#include "afford/core_types.hpp"

namespace afford {

struct TokenSequence {
  Tensor embeddings;  // T x D_e
  std::size_t length() const { return embeddings.rows(); }
};

// Frozen text encoder. Weights never update, but the mapping stays
// differentiable with respect to the input token embeddings, which is what
// lets gradients reach the learnable prompt context.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::size_t embed_dim() const = 0;    // D_e
  virtual std::size_t feature_dim() const = 0;  // D_t

  // Token embeddings of a class-name string (one token per word).
  virtual Tensor class_embedding(const std::string& name) const = 0;

  // (T x D_e) token node -> (1 x D_t) feature node, pre-normalization.
  virtual ad::NodePtr encode(const ad::NodePtr& tokens) const = 0;
};

// Deterministic stand-in for a frozen foundation-model text branch: mean-pools
// the token embeddings and applies a fixed seeded affine map. Smooth
// everywhere and permutation-invariant over tokens. Word embeddings come from
// a seeded hash-to-vector map, so any class-name string encodes without a
// tokenizer.
class StubTextEncoder final : public TextEncoder {
 public:
  StubTextEncoder(std::uint64_t seed, std::size_t embed_dim, std::size_t feature_dim);

  std::size_t embed_dim() const override { return embed_dim_; }
  std::size_t feature_dim() const override { return feature_dim_; }
  Tensor class_embedding(const std::string& name) const override;
  ad::NodePtr encode(const ad::NodePtr& tokens) const override;

 private:
  std::uint64_t seed_;
  std::size_t embed_dim_;
  std::size_t feature_dim_;
  Tensor weight_;  // D_t x D_e
  Tensor bias_;    // 1 x D_t
};

// [v_1 .. v_p, class tokens] in that order.
TokenSequence build_affordance_prompt(const PromptContext& ctx, const Tensor& class_embedding);

// Fixed object-branch template.
std::string build_object_prompt(const std::string& object_name);

// Graph builders used inside the training loop. Class-name embeddings enter as
// constants; the context enters through ctx_node so gradients reach it.
ad::NodePtr encode_affordance_texts_node(const ad::NodePtr& ctx_node, const LabelSpace& labels,
                                         const TextEncoder& enc);
// ctx_node is null for the default fixed-prompt object branch.
ad::NodePtr encode_object_texts_node(const LabelSpace& labels, const TextEncoder& enc,
                                     const ad::NodePtr& ctx_node = nullptr);

// Value-level wrappers returning unit-normalized feature sets.
TextFeatureSet encode_affordance_texts(const PromptContext& ctx, const LabelSpace& labels,
                                       const TextEncoder& enc);
TextFeatureSet encode_object_texts(const LabelSpace& labels, const TextEncoder& enc);

std::unique_ptr<TextEncoder> stub_text_encoder(std::uint64_t seed, std::size_t embed_dim,
                                               std::size_t feature_dim);

// Splits on single spaces; used for word-level stub embeddings.
std::vector<std::string> split_words(const std::string& name);

}  // namespace afford
