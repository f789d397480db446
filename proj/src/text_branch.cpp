#include "afford/text_branch.hpp"

#include <sstream>

#include "afford/rng.hpp"

namespace afford {

std::vector<std::string> split_words(const std::string& name) {
  std::vector<std::string> words;
  std::istringstream in(name);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

StubTextEncoder::StubTextEncoder(std::uint64_t seed, std::size_t embed_dim,
                                 std::size_t feature_dim)
    : seed_(seed), embed_dim_(embed_dim), feature_dim_(feature_dim) {
  check(embed_dim > 0 && feature_dim > 0, "[StubTextEncoder] dimensions must be positive");
  Rng rng(derive_seed(seed, "text-encoder-affine"));
  weight_ = Tensor(feature_dim, embed_dim);
  for (double& v : weight_.data()) v = rng.uniform(-1.0, 1.0);
  // A small bias: mean pooling already shrinks the token signal by 1/T, and a
  // large shared offset would collapse the normalized class features onto one
  // direction.
  bias_ = Tensor(1, feature_dim);
  for (double& v : bias_.data()) v = rng.uniform(-0.1, 0.1);
}

Tensor StubTextEncoder::class_embedding(const std::string& name) const {
  check(!name.empty(), "[StubTextEncoder] empty class name");
  const auto words = split_words(name);
  check(!words.empty(), "[StubTextEncoder] class name has no words");
  Tensor out(words.size(), embed_dim_);
  for (std::size_t t = 0; t < words.size(); ++t) {
    Rng rng(derive_seed(seed_ ^ hash64(words[t]), "word-embedding"));
    for (std::size_t j = 0; j < embed_dim_; ++j) out.at(t, j) = rng.uniform(-1.0, 1.0);
  }
  return out;
}

ad::NodePtr StubTextEncoder::encode(const ad::NodePtr& tokens) const {
  check(tokens->value.ndim() == 2 && tokens->value.cols() == embed_dim_,
        "[StubTextEncoder::encode] tokens must be T x D_e");
  auto pooled = ad::mean_rows(tokens);
  return ad::add(ad::matmul_nt(pooled, ad::constant(weight_)), ad::constant(bias_));
}

TokenSequence build_affordance_prompt(const PromptContext& ctx, const Tensor& class_embedding) {
  check(class_embedding.ndim() == 2 && class_embedding.rows() >= 1,
        "[build_affordance_prompt] class embedding must have at least one token");
  const std::size_t p = ctx.length();
  if (p > 0)
    check(ctx.vectors.cols() == class_embedding.cols(),
          "[build_affordance_prompt] context and class embedding dimensions disagree");
  const std::size_t d = class_embedding.cols();
  TokenSequence seq;
  seq.embeddings = Tensor(p + class_embedding.rows(), d);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < d; ++j) seq.embeddings.at(i, j) = ctx.vectors.at(i, j);
  for (std::size_t i = 0; i < class_embedding.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) seq.embeddings.at(p + i, j) = class_embedding.at(i, j);
  return seq;
}

std::string build_object_prompt(const std::string& object_name) {
  check(!object_name.empty(), "[build_object_prompt] empty object name");
  return "A good image of a " + object_name;
}

namespace {

// Shared by the affordance and object paths; ctx_node may be null (no
// learnable prefix, the object-branch default).
ad::NodePtr encode_prompts(const ad::NodePtr& ctx_node,
                           const std::vector<std::string>& prompts, const TextEncoder& enc) {
  check(!prompts.empty(), "[encode_prompts] no prompts");
  std::vector<ad::NodePtr> rows;
  rows.reserve(prompts.size());
  for (const auto& prompt : prompts) {
    auto class_tokens = ad::constant(enc.class_embedding(prompt));
    ad::NodePtr tokens = ctx_node && ctx_node->value.numel() > 0
                             ? ad::concat_rows({ctx_node, class_tokens})
                             : class_tokens;
    rows.push_back(enc.encode(tokens));
  }
  return ad::l2_normalize_rows(ad::concat_rows(rows));
}

}  // namespace

ad::NodePtr encode_affordance_texts_node(const ad::NodePtr& ctx_node, const LabelSpace& labels,
                                         const TextEncoder& enc) {
  check(labels.num_affordances() >= 1, "[encode_affordance_texts] no affordance classes");
  return encode_prompts(ctx_node, labels.affordance_names, enc);
}

ad::NodePtr encode_object_texts_node(const LabelSpace& labels, const TextEncoder& enc,
                                     const ad::NodePtr& ctx_node) {
  check(labels.num_objects() >= 1, "[encode_object_texts] no object classes");
  std::vector<std::string> prompts;
  prompts.reserve(labels.num_objects());
  for (const auto& name : labels.object_names) prompts.push_back(build_object_prompt(name));
  return encode_prompts(ctx_node, prompts, enc);
}

TextFeatureSet encode_affordance_texts(const PromptContext& ctx, const LabelSpace& labels,
                                       const TextEncoder& enc) {
  auto node = encode_affordance_texts_node(ad::constant(ctx.vectors), labels, enc);
  TextFeatureSet set;
  set.features = node->value;
  set.kind = TextKind::kAffordance;
  set.class_names = labels.affordance_names;
  return set;
}

TextFeatureSet encode_object_texts(const LabelSpace& labels, const TextEncoder& enc) {
  auto node = encode_object_texts_node(labels, enc);
  TextFeatureSet set;
  set.features = node->value;
  set.kind = TextKind::kObject;
  set.class_names = labels.object_names;
  return set;
}

std::unique_ptr<TextEncoder> stub_text_encoder(std::uint64_t seed, std::size_t embed_dim,
                                               std::size_t feature_dim) {
  return std::make_unique<StubTextEncoder>(seed, embed_dim, feature_dim);
}

}  // namespace afford
