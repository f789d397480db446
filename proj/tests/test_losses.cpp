#include <cmath>

#include "doctest.h"

#include "afford/losses.hpp"
#include "afford/rng.hpp"

using namespace afford;

namespace {

AffordanceMask gray_mask(std::size_t h, std::size_t w, std::size_t class_id = 0) {
  AffordanceMask m;
  m.height = h;
  m.width = w;
  m.values = Tensor(h, w);
  m.mode = MaskMode::kGroundtruthGray;
  m.class_id = class_id;
  return m;
}

Tensor unit_row(std::initializer_list<double> values) {
  Tensor t = Tensor::row_vector(values);
  double n = 0.0;
  for (double v : t.data()) n += v * v;
  n = std::sqrt(n);
  for (double& v : t.data()) v /= n;
  return t;
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("cosine similarity basics") {
    const Tensor a = Tensor::row_vector({1.0, 2.0, -1.0});
    CHECK(cosine_sim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    const Tensor b = Tensor::row_vector({2.0, -1.0, 0.0});
    CHECK(cosine_sim(a, b) == doctest::Approx(0.0).epsilon(1e-12));
    Tensor a3 = a;
    for (double& v : a3.data()) v *= 3.0;
    CHECK(cosine_sim(a, a3) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(cosine_sim(a, Tensor::row_vector({0.0, 0.0, 0.0})), Error);
  }

  TEST_CASE("cosine similarity is invariant to positive rescaling of either side") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
      Tensor a(1, 5), b(1, 5);
      for (double& v : a.data()) v = rng.uniform(-1.0, 1.0);
      for (double& v : b.data()) v = rng.uniform(-1.0, 1.0);
      const double base = cosine_sim(a, b);
      const double alpha = rng.uniform(0.1, 10.0), beta = rng.uniform(0.1, 10.0);
      Tensor a2 = a, b2 = b;
      for (double& v : a2.data()) v *= alpha;
      for (double& v : b2.data()) v *= beta;
      CHECK(std::abs(cosine_sim(a2, b2) - base) < 1e-12);
    }
  }

  TEST_CASE("bce: perfect, uniform and hand-computed cases") {
    // Perfect binary prediction differs from zero only through the clamp.
    Tensor hit = Tensor::matrix(1, 2, {1.0, 0.0});
    CHECK(bce_loss({hit}, {hit}) <= -std::log(1.0 - 1e-7) + 1e-12);

    Tensor half = Tensor::full({4, 4}, 0.5);
    Tensor ones = Tensor::full({4, 4}, 1.0);
    CHECK(bce_loss({half}, {ones}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // Oracle by direct formula: -(1/2)(ln 0.8 + ln 0.7).
    Tensor pred = Tensor::matrix(2, 1, {0.8, 0.3});
    Tensor target = Tensor::matrix(2, 1, {1.0, 0.0});
    const double want = -0.5 * (std::log(0.8) + std::log(0.7));
    CHECK(bce_loss({pred}, {target}) == doctest::Approx(want).epsilon(1e-12));
    CHECK(bce_loss({pred}, {target}) == doctest::Approx(0.2899092).epsilon(1e-6));
  }

  TEST_CASE("mask downsampling takes the window maximum") {
    AffordanceMask zero = gray_mask(4, 4);
    CHECK(downsample_mask(zero, 2) == Tensor(2, 2));

    AffordanceMask one_pixel = gray_mask(4, 4);
    one_pixel.values.at(3, 1) = 9.0;
    const Tensor grid = downsample_mask(one_pixel, 2);
    CHECK(grid.at(1, 0) == 9.0);
    CHECK(grid.at(0, 0) == 0.0);
    CHECK(grid.at(0, 1) == 0.0);
    CHECK(grid.at(1, 1) == 0.0);

    // Brute-force window-max oracle on the block example.
    AffordanceMask blocks = gray_mask(4, 4);
    blocks.values.at(0, 1) = 5.0;
    blocks.values.at(1, 2) = 7.0;
    Tensor want(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t y = 2 * i; y < 2 * i + 2; ++y)
          for (std::size_t x = 2 * j; x < 2 * j + 2; ++x)
            want.at(i, j) = std::max(want.at(i, j), blocks.values.at(y, x));
    CHECK(downsample_mask(blocks, 2) == want);
    CHECK(want.at(0, 0) == 5.0);
    CHECK(want.at(0, 1) == 7.0);

    AffordanceMask odd = gray_mask(5, 4);
    CHECK_THROWS_AS(downsample_mask(odd, 2), Error);
  }

  TEST_CASE("binarize is a strict positivity indicator") {
    const Tensor grid = Tensor::matrix(1, 4, {0.0, 2.5, -1.0, 1e-9});
    const Tensor ind = binarize(grid);
    CHECK(ind[0] == 0.0);
    CHECK(ind[1] == 1.0);
    CHECK(ind[2] == 0.0);  // negative values stay inactive
    CHECK(ind[3] == 1.0);
  }

  TEST_CASE("masked pooling: full, single and hand-computed indicators") {
    const Tensor grid = Tensor::matrix(4, 1, {1.0, 2.0, 3.0, 4.0});
    const RegionFeature full = masked_average_pool(grid, Tensor::full({2, 2}, 1.0), 0);
    CHECK(full.vector[0] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(full.patch_count == 4);

    Tensor single(2, 2);
    single.at(1, 0) = 1.0;
    CHECK(masked_average_pool(grid, single, 0).vector[0] == 3.0);

    const Tensor col = Tensor::matrix(2, 2, {1.0, 0.0, 1.0, 0.0});
    CHECK(masked_average_pool(grid, col, 0).vector[0] == doctest::Approx(2.0).epsilon(1e-12));

    CHECK_THROWS_AS(masked_average_pool(grid, Tensor(2, 2), 0), EmptyRegionError);
  }

  TEST_CASE("masked pooling equals the pixel-loop oracle for all 511 indicators") {
    Rng rng(43);
    Tensor grid(9, 4);
    for (double& v : grid.data()) v = rng.uniform(-1.0, 1.0);
    for (unsigned bits = 1; bits < 512; ++bits) {
      Tensor ind(3, 3);
      for (unsigned c = 0; c < 9; ++c) ind[c] = (bits >> c) & 1u ? 1.0 : 0.0;
      const RegionFeature pooled = masked_average_pool(grid, ind, 0);
      double count = 0.0;
      double acc[4] = {0, 0, 0, 0};
      for (unsigned c = 0; c < 9; ++c)
        if (ind[c] != 0.0) {
          count += 1.0;
          for (int k = 0; k < 4; ++k) acc[k] += grid.at(c, k);
        }
      CHECK(pooled.patch_count == static_cast<std::size_t>(count));
      for (int k = 0; k < 4; ++k)
        CHECK(std::abs(pooled.vector[k] - acc[k] / count) <= 1e-12);
    }
  }

  TEST_CASE("infonce: degenerate, uniform and sharp cases") {
    CHECK(infonce({0.37}, 0, 0.01) == 0.0);
    for (std::size_t k = 2; k <= 6; ++k) {
      std::vector<double> sims(k, 0.25);
      CHECK(infonce(sims, k / 2, 0.5) ==
            doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-12));
    }
    // tau = 0.01 with a winning positive: the stable form keeps the true
    // sub-denormal-scale value instead of flushing to zero.
    const double sharp = infonce({1.0, 0.0}, 0, 0.01);
    CHECK(sharp == doctest::Approx(std::log1p(std::exp(-100.0))).epsilon(1e-9));
    CHECK(sharp > 0.0);
    CHECK(sharp < 1e-40);
  }

  TEST_CASE("infonce invariants on random instances") {
    Rng rng(47);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t k = 1 + rng.below(8);
      std::vector<double> sims(k);
      for (double& s : sims) s = rng.uniform(-1.0, 1.0);
      const std::size_t pos = rng.below(k);
      const double tau = rng.uniform(0.01, 1.0);
      const double loss = infonce(sims, pos, tau);

      CHECK(loss >= -1e-12);

      const double shift = rng.uniform(-1.0, 1.0);
      std::vector<double> shifted = sims;
      for (double& s : shifted) s += shift;
      CHECK(std::abs(infonce(shifted, pos, tau) - loss) < 1e-12);

      if (k >= 2) {  // with a single candidate the loss is identically zero
        std::vector<double> better = sims;
        better[pos] += 1e-3;
        CHECK(infonce(better, pos, tau) < loss);
      } else {
        CHECK(loss == 0.0);
      }
    }
  }

  TEST_CASE("affordance alignment loss") {
    const std::size_t patch = 2;
    // One class: a single candidate makes the loss exactly zero.
    {
      Tensor text = unit_row({1.0, 0.0});
      Tensor grid = Tensor::matrix(4, 2, {1, 0, 1, 0, 1, 0, 1, 0});
      AffordanceMask gt = gray_mask(4, 4, 0);
      gt.values.at(0, 0) = 255.0;
      TextFeatureSet set;
      set.features = text;
      CHECK(ami_loss(set, grid, gt, 0.01, patch) == 0.0);
    }
    // Aligned positive with orthogonal negatives: loss is tiny but nonzero.
    {
      Tensor text(3, 3);
      text.at(0, 0) = 1.0;  // positive row aligned with the pooled feature
      text.at(1, 1) = 1.0;
      text.at(2, 2) = 1.0;
      Tensor grid(4, 3);
      for (std::size_t r = 0; r < 4; ++r) grid.at(r, 0) = 2.0;
      AffordanceMask gt = gray_mask(4, 4, 0);
      gt.values.at(1, 1) = 200.0;
      TextFeatureSet set;
      set.features = text;
      const double loss = ami_loss(set, grid, gt, 0.01, patch);
      CHECK(loss >= 0.0);
      CHECK(loss <= 1e-10);
    }
    // All text rows identical: ln C.
    {
      Tensor text(4, 2);
      for (std::size_t r = 0; r < 4; ++r) {
        text.at(r, 0) = 0.6;
        text.at(r, 1) = 0.8;
      }
      Tensor grid = Tensor::matrix(4, 2, {1, 1, 1, 1, 1, 1, 1, 1});
      AffordanceMask gt = gray_mask(4, 4, 2);
      gt.values.at(3, 3) = 10.0;
      TextFeatureSet set;
      set.features = text;
      CHECK(ami_loss(set, grid, gt, 0.1, patch) ==
            doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
    // Empty region propagates the skip signal.
    {
      TextFeatureSet set;
      set.features = unit_row({1.0, 0.0});
      Tensor grid(4, 2);
      for (double& v : grid.data()) v = 1.0;
      CHECK_THROWS_AS(ami_loss(set, grid, gray_mask(4, 4, 0), 0.01, patch),
                      EmptyRegionError);
    }
  }

  TEST_CASE("object alignment loss") {
    TextFeatureSet objects;
    objects.kind = TextKind::kObject;
    // Single object class: zero.
    objects.features = unit_row({0.0, 1.0});
    CHECK(omi_loss(objects, Tensor::row_vector({0.3, 0.4}), 0, 0.01) == 0.0);

    // 50 identical prototypes: ln 50.
    objects.features = Tensor(50, 2);
    for (std::size_t r = 0; r < 50; ++r) {
      objects.features.at(r, 0) = 0.6;
      objects.features.at(r, 1) = 0.8;
    }
    const double loss = omi_loss(objects, Tensor::row_vector({1.0, -1.0}), 7, 0.01);
    CHECK(loss == doctest::Approx(std::log(50.0)).epsilon(1e-12));
    CHECK(loss == doctest::Approx(3.912023).epsilon(1e-6));

    CHECK_THROWS_AS(omi_loss(objects, Tensor::row_vector({1.0, 0.0}), 50, 0.01), Error);
  }

  TEST_CASE("total loss combines the three terms in a fixed order") {
    LossReport r = total_loss(0.5, 2.0, 1.0, 0.01, 1.0);
    CHECK(r.total == doctest::Approx(1.52).epsilon(1e-12));
    CHECK(r.total == 0.5 + 0.01 * 2.0 + 1.0 * 1.0);

    CHECK(total_loss(0.7, 123.0, 9.0, 0.0, 0.0).total == 0.7);
    CHECK(total_loss(0.0, 0.0, 0.0, 0.3, 0.4).total == 0.0);
    CHECK_THROWS_AS(total_loss(0.1, 0.1, 0.1, -0.5, 0.0), Error);
  }
}
