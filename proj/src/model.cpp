#include "afford/model.hpp"

#include <cmath>

#include "afford/rng.hpp"

namespace afford {

ModelParams init_model(std::uint64_t seed, const ModelDims& dims) {
  check(dims.d_e >= 1 && dims.d_v >= 1 && dims.d_t >= 1, "[init_model] bad dimensions");
  ModelParams p;
  p.dims = dims;
  // Context vectors start near zero (the usual prompt-tuning init); a large
  // shared prefix would otherwise drown the class token in the pooled mean.
  p.ctx.vectors = Tensor(dims.prompt_length, dims.d_e);
  Rng rng(derive_seed(seed, "prompt-context"));
  for (double& v : p.ctx.vectors.data()) v = rng.uniform(-0.05, 0.05);
  p.ctx.trainable = true;
  p.fusion = init_fusion(derive_seed(seed, "fusion"), dims.d_v, dims.d_t, dims.encoder_layers);
  p.decoder = init_decoder(derive_seed(seed, "decoder"), dims.d_v, dims.d_t,
                           dims.decoder_layers, dims.decoder_heads);
  Rng rng_omi(derive_seed(seed, "omi-projection"));
  const double a = std::sqrt(6.0 / static_cast<double>(dims.d_v + dims.d_t));
  p.omi_projection = Tensor(dims.d_v, dims.d_t);
  for (double& v : p.omi_projection.data()) v = rng_omi.uniform(-a, a);
  return p;
}

// visit_params and the leaf construction in model_forward must stay in the
// same order; checkpoints and SGD read gradients positionally.
void visit_params(ModelParams& p,
                  const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("prompt_context", p.ctx.vectors);
  fn("fusion.layer_logits", p.fusion.layer_logits);
  fn("fusion.projection", p.fusion.projection);
  fn("fusion.bias", p.fusion.bias);
  for (std::size_t l = 0; l < p.decoder.layers.size(); ++l) {
    const std::string base = "decoder.layer" + std::to_string(l) + ".";
    auto& layer = p.decoder.layers[l];
    fn(base + "wq", layer.wq);
    fn(base + "wk", layer.wk);
    fn(base + "wv", layer.wv);
    fn(base + "wo", layer.wo);
    fn(base + "w1", layer.w1);
    fn(base + "b1", layer.b1);
    fn(base + "w2", layer.w2);
    fn(base + "b2", layer.b2);
  }
  fn("decoder.cls_inject", p.decoder.cls_inject);
  fn("omi.projection", p.omi_projection);
}

void visit_params(const ModelParams& p,
                  const std::function<void(const std::string&, const Tensor&)>& fn) {
  visit_params(const_cast<ModelParams&>(p),
               [&fn](const std::string& name, Tensor& t) { fn(name, t); });
}

SampleTargets prepare_targets(const Sample& sample, std::size_t num_affordances,
                              std::size_t patch_size) {
  SampleTargets out;
  out.scaled.assign(num_affordances, Tensor(sample.image.height, sample.image.width));
  for (const AffordanceMask& m : sample.masks) {
    check(m.class_id < num_affordances, "[prepare_targets] class index out of range");
    const AffordanceMask scaled =
        m.mode == MaskMode::kGroundtruthGray ? scale_mask(m) : m;
    out.scaled[m.class_id] = scaled.values;
    SampleTargets::Region region;
    region.class_id = m.class_id;
    region.cells = active_cells(binarize(downsample_mask(m, patch_size)));
    out.regions.push_back(std::move(region));
  }
  return out;
}

Tensor object_text_features(const LabelSpace& labels, const TextEncoder& object_enc) {
  return encode_object_texts_node(labels, object_enc)->value;
}

ForwardResult model_forward(const ModelParams& params, const Sample& sample,
                            const SampleTargets& targets, const PatchFeatureMap& vision,
                            const Tensor& object_text, const LabelSpace& labels,
                            const TextEncoder& text_enc, const TextEncoder& object_enc,
                            const Hyperparams& hp, const LossToggles& toggles) {
  check(labels.num_affordances() == targets.scaled.size(),
        "[model_forward] target count does not match the label space");
  check(sample.object_class < labels.num_objects(), "[model_forward] bad object class");

  ForwardResult r;
  auto add_leaf = [&r](const std::string& name, const Tensor& t) {
    r.leaf_names.push_back(name);
    r.leaves.push_back(ad::leaf(t));
    return r.leaves.back();
  };

  // Leaves, in visit_params order.
  auto ctx_leaf = add_leaf("prompt_context", params.ctx.vectors);
  auto fusion_logits = add_leaf("fusion.layer_logits", params.fusion.layer_logits);
  auto fusion_proj = add_leaf("fusion.projection", params.fusion.projection);
  auto fusion_bias = add_leaf("fusion.bias", params.fusion.bias);
  DecoderLeaves dec;
  for (std::size_t l = 0; l < params.decoder.layers.size(); ++l) {
    const std::string base = "decoder.layer" + std::to_string(l) + ".";
    const auto& layer = params.decoder.layers[l];
    dec.layers.push_back({add_leaf(base + "wq", layer.wq), add_leaf(base + "wk", layer.wk),
                          add_leaf(base + "wv", layer.wv), add_leaf(base + "wo", layer.wo),
                          add_leaf(base + "w1", layer.w1), add_leaf(base + "b1", layer.b1),
                          add_leaf(base + "w2", layer.w2), add_leaf(base + "b2", layer.b2)});
  }
  dec.cls_inject = add_leaf("decoder.cls_inject", params.decoder.cls_inject);
  auto omi_proj = add_leaf("omi.projection", params.omi_projection);

  // Text branch.
  r.affordance_text = encode_affordance_texts_node(ctx_leaf, labels, text_enc);

  // Vision branch is frozen; features enter as constants.
  auto cls = ad::constant(vision.cls);
  r.patches = fuse_node(vision.layer_stack, fusion_logits, fusion_proj, fusion_bias);

  r.class_aware_text = decode_node(r.affordance_text, r.patches, cls, dec,
                                   params.decoder.n_heads);

  r.masks = predict_masks_node(r.patches, r.class_aware_text, vision.grid_h, vision.grid_w,
                               sample.image.height, sample.image.width);

  auto bce_node = ad::bce(r.masks, targets.scaled);

  const bool ami_active = toggles.enable_ami && hp.lambda1 > 0.0;
  ad::NodePtr ami_node;
  if (ami_active) {
    auto ami_text = toggles.ami_on_encoder_features ? r.affordance_text : r.class_aware_text;
    std::vector<ad::NodePtr> terms;
    for (const auto& region : targets.regions) {
      if (region.cells.empty()) continue;  // degenerate mask: term skipped
      auto pooled = ad::masked_mean_rows(r.patches, region.cells);
      std::vector<ad::NodePtr> sims;
      for (std::size_t k = 0; k < labels.num_affordances(); ++k)
        sims.push_back(ad::cosine(ad::row(ami_text, k), pooled));
      terms.push_back(ad::infonce(ad::concat_rows(sims), region.class_id, hp.tau1));
    }
    if (!terms.empty()) {
      ad::NodePtr sum = terms[0];
      for (std::size_t i = 1; i < terms.size(); ++i) sum = ad::add(sum, terms[i]);
      ami_node = terms.size() == 1 ? sum
                                   : ad::scale(sum, 1.0 / static_cast<double>(terms.size()));
    }
  }

  const bool omi_active = toggles.enable_omi && hp.lambda2 > 0.0;
  ad::NodePtr omi_node;
  if (omi_active) {
    ad::NodePtr obj_text =
        toggles.object_prompt_context
            ? encode_object_texts_node(labels, object_enc, ctx_leaf)
            : ad::constant(object_text);
    auto projected = ad::matmul(cls, omi_proj);
    omi_node = omi_loss_node(obj_text, projected, sample.object_class, hp.tau2);
  }

  ad::NodePtr total = bce_node;
  if (ami_node) total = ad::add(total, ad::scale(ami_node, hp.lambda1));
  if (omi_node) total = ad::add(total, ad::scale(omi_node, hp.lambda2));
  r.total = total;
  r.report = total_loss(bce_node->scalar(), ami_node ? ami_node->scalar() : 0.0,
                        omi_node ? omi_node->scalar() : 0.0, hp.lambda1, hp.lambda2);
  return r;
}

std::vector<Tensor> predict_sample(const ModelParams& params, const PatchFeatureMap& vision,
                                   std::size_t out_h, std::size_t out_w,
                                   const LabelSpace& labels, const TextEncoder& text_enc) {
  auto text = encode_affordance_texts_node(ad::constant(params.ctx.vectors), labels, text_enc);
  auto patches = fuse_node(vision.layer_stack, ad::constant(params.fusion.layer_logits),
                           ad::constant(params.fusion.projection),
                           ad::constant(params.fusion.bias));
  auto leaves = decoder_leaves(params.decoder);
  auto class_aware = decode_node(text, patches, ad::constant(vision.cls), leaves,
                                 params.decoder.n_heads);
  auto masks = predict_masks_node(patches, class_aware, vision.grid_h, vision.grid_w, out_h,
                                  out_w);
  std::vector<Tensor> out;
  out.reserve(masks.size());
  for (const auto& m : masks) out.push_back(m->value);
  return out;
}

}  // namespace afford
