#include "afford/decoder_head.hpp"

#include <cmath>

#include "afford/rng.hpp"

namespace afford {

namespace {

Tensor xavier(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor t(rows, cols);
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : t.data()) v = rng.uniform(-a, a);
  return t;
}

}  // namespace

DecoderParams init_decoder(std::uint64_t seed, std::size_t d_v, std::size_t d_t,
                           std::size_t n_layers, std::size_t n_heads) {
  check(n_layers >= 1, "[init_decoder] need at least one layer");
  check(n_heads >= 1 && d_t % n_heads == 0,
        "[init_decoder] feature dimension must be divisible by the head count");
  Rng rng(derive_seed(seed, "decoder"));
  DecoderParams p;
  p.n_heads = n_heads;
  const std::size_t d_ff = 2 * d_t;
  for (std::size_t l = 0; l < n_layers; ++l) {
    DecoderLayerParams layer;
    layer.wq = xavier(rng, d_t, d_t);
    layer.wk = xavier(rng, d_t, d_t);
    layer.wv = xavier(rng, d_t, d_t);
    // Output-side projections start at zero: the decoder opens as the
    // identity on the (normalized) text rows, keeping the class directions
    // separated, and the attention/feed-forward paths fade in as they learn.
    layer.wo = Tensor(d_t, d_t);
    layer.w1 = xavier(rng, d_t, d_ff);
    layer.b1 = Tensor(1, d_ff);
    layer.w2 = Tensor(d_ff, d_t);
    layer.b2 = Tensor(1, d_t);
    p.layers.push_back(std::move(layer));
  }
  p.cls_inject = xavier(rng, d_v, d_t);
  return p;
}

DecoderLeaves decoder_leaves(const DecoderParams& params) {
  DecoderLeaves leaves;
  for (const auto& l : params.layers)
    leaves.layers.push_back({ad::leaf(l.wq), ad::leaf(l.wk), ad::leaf(l.wv), ad::leaf(l.wo),
                             ad::leaf(l.w1), ad::leaf(l.b1), ad::leaf(l.w2), ad::leaf(l.b2)});
  leaves.cls_inject = ad::leaf(params.cls_inject);
  return leaves;
}

namespace {

ad::NodePtr multi_head_attention(const ad::NodePtr& queries, const ad::NodePtr& memory,
                                 const std::vector<ad::NodePtr>& w, std::size_t n_heads) {
  const std::size_t d_t = queries->value.cols();
  const std::size_t d_h = d_t / n_heads;
  auto q = ad::matmul(queries, w[0]);
  auto k = ad::matmul(memory, w[1]);
  auto v = ad::matmul(memory, w[2]);
  std::vector<ad::NodePtr> heads;
  heads.reserve(n_heads);
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(d_h));
  for (std::size_t h = 0; h < n_heads; ++h) {
    auto qh = ad::slice_cols(q, h * d_h, (h + 1) * d_h);
    auto kh = ad::slice_cols(k, h * d_h, (h + 1) * d_h);
    auto vh = ad::slice_cols(v, h * d_h, (h + 1) * d_h);
    auto scores = ad::scale(ad::matmul_nt(qh, kh), att_scale);
    heads.push_back(ad::matmul(ad::softmax_rows(scores), vh));
  }
  auto merged = n_heads == 1 ? heads[0] : ad::concat_cols(heads);
  return ad::matmul(merged, w[3]);
}

}  // namespace

ad::NodePtr decode_node(const ad::NodePtr& text, const ad::NodePtr& patches,
                        const ad::NodePtr& cls, const DecoderLeaves& leaves,
                        std::size_t n_heads) {
  check(text->value.ndim() == 2 && patches->value.ndim() == 2,
        "[decode] text and patch features must be 2-D");
  check(text->value.cols() == patches->value.cols(),
        "[decode] text and patch feature dimensions disagree");
  check(cls->value.rows() == 1 && cls->value.cols() == leaves.cls_inject->value.rows(),
        "[decode] summary vector does not match the injection projection");
  check(leaves.cls_inject->value.cols() == text->value.cols(),
        "[decode] injection projection must land in the text dimension");
  check(n_heads >= 1 && text->value.cols() % n_heads == 0,
        "[decode] feature dimension must be divisible by the head count");

  auto injected = ad::matmul(cls, leaves.cls_inject);          // 1 x D_t
  auto memory = ad::concat_rows({patches, injected});          // (N+1) x D_t

  ad::NodePtr x = text;
  for (const auto& w : leaves.layers) {
    x = ad::add(x, multi_head_attention(x, memory, w, n_heads));
    auto hidden = ad::gelu(ad::add_rowvec(ad::matmul(x, w[4]), w[5]));
    x = ad::add(x, ad::add_rowvec(ad::matmul(hidden, w[6]), w[7]));
  }
  return ad::l2_normalize_rows(x);
}

std::vector<ad::NodePtr> predict_masks_node(const ad::NodePtr& patches,
                                            const ad::NodePtr& class_text, std::size_t grid_h,
                                            std::size_t grid_w, std::size_t out_h,
                                            std::size_t out_w) {
  check(patches->value.cols() == class_text->value.cols(),
        "[predict_masks] patch and text feature dimensions disagree");
  check(patches->value.rows() == grid_h * grid_w,
        "[predict_masks] patch count does not match the grid shape");
  auto probs = ad::sigmoid(ad::matmul_nt(patches, class_text));  // N x C
  std::vector<ad::NodePtr> masks;
  const std::size_t c = class_text->value.rows();
  masks.reserve(c);
  for (std::size_t ci = 0; ci < c; ++ci) {
    auto col = ad::slice_cols(probs, ci, ci + 1);
    auto grid = ad::reshape(col, {grid_h, grid_w});
    masks.push_back(ad::upsample_bilinear(grid, out_h, out_w));
  }
  return masks;
}

TextFeatureSet decode(const TextFeatureSet& text, const Tensor& patches, const Tensor& cls,
                      const DecoderParams& params) {
  auto leaves = decoder_leaves(params);
  auto node = decode_node(ad::constant(text.features), ad::constant(patches),
                          ad::constant(cls), leaves, params.n_heads);
  TextFeatureSet out = text;
  out.features = node->value;
  return out;
}

std::vector<AffordanceMask> predict_masks(const Tensor& patches, const TextFeatureSet& text,
                                          std::size_t grid_h, std::size_t grid_w,
                                          std::size_t out_h, std::size_t out_w) {
  auto nodes = predict_masks_node(ad::constant(patches), ad::constant(text.features), grid_h,
                                  grid_w, out_h, out_w);
  std::vector<AffordanceMask> masks;
  masks.reserve(nodes.size());
  for (std::size_t c = 0; c < nodes.size(); ++c) {
    AffordanceMask m;
    m.height = out_h;
    m.width = out_w;
    m.values = nodes[c]->value;
    m.mode = MaskMode::kPrediction;
    m.class_id = c;
    masks.push_back(std::move(m));
  }
  return masks;
}

}  // namespace afford
