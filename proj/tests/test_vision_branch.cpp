#include <cmath>

#include "doctest.h"

#include "afford/rng.hpp"
#include "afford/vision_branch.hpp"

using namespace afford;

namespace {

ImageTensor uniform_image(std::size_t h, std::size_t w, double r, double g, double b) {
  ImageTensor img;
  img.height = h;
  img.width = w;
  img.pixels = Tensor({h, w, 3});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      img.pixels.at3(y, x, 0) = r;
      img.pixels.at3(y, x, 1) = g;
      img.pixels.at3(y, x, 2) = b;
    }
  return img;
}

ImageTensor random_image(std::uint64_t seed, std::size_t h, std::size_t w) {
  ImageTensor img = uniform_image(h, w, 0, 0, 0);
  Rng rng(seed);
  for (double& v : img.pixels.data()) v = rng.uniform();
  return img;
}

}  // namespace

TEST_SUITE("vision_branch") {
  TEST_CASE("grid shape follows the patch size and layer count") {
    const StubImageEncoder enc(1, 8, 16, 4);
    const PatchFeatureMap f = encode_image(random_image(3, 32, 32), enc);
    CHECK(f.grid_h == 4);
    CHECK(f.grid_w == 4);
    CHECK(f.layer_stack.size() == 4);
    for (const Tensor& g : f.layer_stack) {
      CHECK(g.rows() == 16);
      CHECK(g.cols() == 16);
    }
    CHECK(f.cls.numel() == 16);
  }

  TEST_CASE("encoding is deterministic") {
    const StubImageEncoder enc(1, 8, 16, 4);
    const ImageTensor img = random_image(3, 32, 32);
    const PatchFeatureMap a = encode_image(img, enc);
    const PatchFeatureMap b = encode_image(img, enc);
    CHECK(a.cls == b.cls);
    for (std::size_t l = 0; l < 4; ++l) CHECK(a.layer_stack[l] == b.layer_stack[l]);
  }

  TEST_CASE("black and white images get different summary vectors") {
    const StubImageEncoder enc(1, 8, 16, 4);
    const PatchFeatureMap black = enc.encode(uniform_image(32, 32, 0, 0, 0));
    const PatchFeatureMap white = enc.encode(uniform_image(32, 32, 1, 1, 1));
    CHECK_FALSE(black.cls == white.cls);
  }

  TEST_CASE("patch features are local: a pixel edit moves only its own patch") {
    const StubImageEncoder enc(1, 8, 16, 2);
    ImageTensor img = random_image(5, 32, 32);
    const PatchFeatureMap before = enc.encode(img);
    img.pixels.at3(2, 3, 1) += 0.25;  // inside patch (0, 0)
    const PatchFeatureMap after = enc.encode(img);
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t r = 0; r < 16; ++r) {
        bool same = true;
        for (std::size_t k = 0; k < 16; ++k)
          same &= before.layer_stack[l].at(r, k) == after.layer_stack[l].at(r, k);
        if (r == 0) CHECK_FALSE(same);
        else CHECK(same);
      }
  }

  TEST_CASE("different seeds give different features") {
    const StubImageEncoder a(1, 8, 16, 2), b(2, 8, 16, 2);
    const ImageTensor img = random_image(3, 16, 16);
    CHECK_FALSE(a.encode(img).cls == b.encode(img).cls);
  }

  TEST_CASE("indivisible image dimensions are rejected") {
    const StubImageEncoder enc(1, 8, 16, 2);
    CHECK_THROWS_AS(enc.encode(random_image(3, 30, 32)), Error);
  }
}
