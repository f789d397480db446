#include <cmath>

#include "doctest.h"

#include "afford/fusion.hpp"
#include "afford/rng.hpp"
#include "gradcheck.hpp"

using namespace afford;

namespace {

std::vector<Tensor> random_stack(std::uint64_t seed, std::size_t layers, std::size_t n,
                                 std::size_t d_v) {
  Rng rng(seed);
  std::vector<Tensor> stack;
  for (std::size_t l = 0; l < layers; ++l) {
    Tensor g(n, d_v);
    for (double& v : g.data()) v = rng.uniform(-1.0, 1.0);
    stack.push_back(std::move(g));
  }
  return stack;
}

}  // namespace

TEST_SUITE("fusion") {
  TEST_CASE("initialization: uniform mixing, bounded projection, zero bias") {
    const FusionParams p = init_fusion(5, 6, 4, 3);
    const auto w = mixing_coefficients(p);
    for (double v : w) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    const double a = std::sqrt(6.0 / 10.0);
    for (double v : p.projection.data()) {
      CHECK(v > -a);
      CHECK(v < a);
    }
    for (double v : p.bias.data()) CHECK(v == 0.0);
    const FusionParams q = init_fusion(5, 6, 4, 3);
    CHECK(p.projection == q.projection);
  }

  TEST_CASE("single layer degenerates to projection plus bias") {
    const auto stack = random_stack(1, 1, 4, 3);
    FusionParams p = init_fusion(2, 3, 2, 1);
    CHECK(mixing_coefficients(p) == std::vector<double>{1.0});
    const Tensor fused = fuse(stack, p);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 2; ++c) {
        double want = p.bias[c];
        for (std::size_t k = 0; k < 3; ++k) want += stack[0].at(r, k) * p.projection.at(k, c);
        CHECK(fused.at(r, c) == doctest::Approx(want).epsilon(1e-12));
      }
  }

  TEST_CASE("identical grids across layers match the single-layer output") {
    auto one = random_stack(3, 1, 4, 3);
    std::vector<Tensor> four(4, one[0]);
    FusionParams p1 = init_fusion(2, 3, 2, 1);
    FusionParams p4 = init_fusion(2, 3, 2, 4);
    p4.projection = p1.projection;  // same projection, different mixing arity
    p4.layer_logits[1] = 0.7;       // arbitrary non-uniform mixing
    const Tensor a = fuse(one, p1);
    const Tensor b = fuse(four, p4);
    for (std::size_t i = 0; i < a.numel(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }

  TEST_CASE("hand example: equal weights average a 1x1 grid") {
    std::vector<Tensor> stack = {Tensor::matrix(1, 1, {2.0}), Tensor::matrix(1, 1, {4.0})};
    FusionParams p;
    p.layer_logits = Tensor(1, 2);  // zero logits: weights (0.5, 0.5)
    p.projection = Tensor::matrix(1, 1, {1.0});
    p.bias = Tensor(1, 1);
    const Tensor fused = fuse(stack, p);
    CHECK(fused[0] == doctest::Approx(3.0).epsilon(1e-12));
  }

  TEST_CASE("permuting layers together with their logits changes nothing") {
    const auto stack = random_stack(11, 3, 6, 4);
    FusionParams p = init_fusion(4, 4, 3, 3);
    p.layer_logits = Tensor::row_vector({0.3, -0.2, 1.1});
    const Tensor base = fuse(stack, p);

    std::vector<Tensor> permuted = {stack[2], stack[0], stack[1]};
    FusionParams q = p;
    q.layer_logits = Tensor::row_vector({1.1, 0.3, -0.2});
    const Tensor moved = fuse(permuted, q);
    for (std::size_t i = 0; i < base.numel(); ++i)
      CHECK(base[i] == doctest::Approx(moved[i]).epsilon(1e-12));
  }

  TEST_CASE("gradients w.r.t. every fusion parameter match central differences") {
    const auto stack = random_stack(13, 3, 4, 5);
    FusionParams p = init_fusion(17, 5, 3, 3);
    p.layer_logits = Tensor::row_vector({0.1, -0.4, 0.2});
    Rng rng(19);
    Tensor w(1, 4 * 3);
    for (double& v : w.data()) v = rng.uniform(-1.0, 1.0);

    auto scalar_of = [&](const ad::NodePtr& logits, const ad::NodePtr& proj,
                         const ad::NodePtr& bias) {
      auto fused = fuse_node(stack, logits, proj, bias);
      auto flat = ad::reshape(fused, {1, fused->value.numel()});
      return ad::matmul_nt(flat, ad::constant(w));
    };
    auto eval = [&]() {
      return scalar_of(ad::constant(p.layer_logits), ad::constant(p.projection),
                       ad::constant(p.bias))
          ->scalar();
    };

    auto logits = ad::leaf(p.layer_logits);
    auto proj = ad::leaf(p.projection);
    auto bias = ad::leaf(p.bias);
    ad::backward(scalar_of(logits, proj, bias));
    CHECK(test::max_grad_rel_err(p.layer_logits, logits->grad, eval) < 1e-4);
    CHECK(test::max_grad_rel_err(p.projection, proj->grad, eval) < 1e-4);
    CHECK(test::max_grad_rel_err(p.bias, bias->grad, eval) < 1e-4);
  }

  TEST_CASE("mismatched layer shapes are rejected") {
    std::vector<Tensor> stack = {Tensor(4, 3), Tensor(5, 3)};
    const FusionParams p = init_fusion(2, 3, 2, 2);
    CHECK_THROWS_AS(fuse(stack, p), Error);
  }
}
