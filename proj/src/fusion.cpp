#include "afford/fusion.hpp"

#include <cmath>

#include "afford/rng.hpp"

namespace afford {

FusionParams init_fusion(std::uint64_t seed, std::size_t d_v, std::size_t d_t,
                         std::size_t num_layers) {
  check(d_v >= 1 && d_t >= 1 && num_layers >= 1, "[init_fusion] bad dimensions");
  FusionParams p;
  p.layer_logits = Tensor(1, num_layers);
  const double a = std::sqrt(6.0 / static_cast<double>(d_v + d_t));
  Rng rng(derive_seed(seed, "fusion-projection"));
  p.projection = Tensor(d_v, d_t);
  for (double& v : p.projection.data()) v = rng.uniform(-a, a);
  p.bias = Tensor(1, d_t);
  return p;
}

std::vector<double> mixing_coefficients(const FusionParams& params) {
  const std::size_t l = params.num_layers();
  std::vector<double> w(l);
  double m = params.layer_logits[0];
  for (std::size_t i = 1; i < l; ++i) m = std::max(m, params.layer_logits[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    w[i] = std::exp(params.layer_logits[i] - m);
    z += w[i];
  }
  for (double& v : w) v /= z;
  return w;
}

ad::NodePtr fuse_node(const std::vector<Tensor>& layer_stack, const ad::NodePtr& logits,
                      const ad::NodePtr& projection, const ad::NodePtr& bias) {
  check(!layer_stack.empty(), "[fuse] empty layer stack");
  const std::size_t l = layer_stack.size();
  check(logits->value.numel() == l, "[fuse] logit count does not match layer count");
  for (const Tensor& g : layer_stack)
    check(g.ndim() == 2 && g.same_shape(layer_stack.front()),
          "[fuse] layer grids must share one shape");
  check(layer_stack.front().cols() == projection->value.rows(),
        "[fuse] projection rows must match the encoder feature dimension");

  auto weights = ad::softmax_rows(logits);  // 1 x L
  // Mixed grid: sum_l w_l * F^l. Each grid is constant, so the product with a
  // single softmax entry is a matmul against a 1 x 1 slice.
  ad::NodePtr mixed;
  for (std::size_t i = 0; i < l; ++i) {
    auto w_i = ad::slice_cols(weights, i, i + 1);  // 1 x 1
    // (N x D_v) scaled by scalar: matmul of (N x 1) ones is wasteful; use
    // matmul of the scalar against the flattened grid instead.
    auto grid = ad::constant(layer_stack[i]);
    auto flat = ad::reshape(grid, {1, layer_stack[i].numel()});
    auto scaled = ad::matmul(w_i, flat);  // 1 x (N*D_v)
    mixed = mixed ? ad::add(mixed, scaled) : scaled;
  }
  auto mixed_grid =
      ad::reshape(mixed, {layer_stack.front().rows(), layer_stack.front().cols()});
  return ad::add_rowvec(ad::matmul(mixed_grid, projection), bias);
}

Tensor fuse(const std::vector<Tensor>& layer_stack, const FusionParams& params) {
  auto node = fuse_node(layer_stack, ad::constant(params.layer_logits),
                        ad::constant(params.projection), ad::constant(params.bias));
  return node->value;
}

}  // namespace afford
