#include "doctest.h"

#include "afford/core_types.hpp"

using namespace afford;

namespace {

Sample make_sample(std::size_t h, std::size_t w) {
  Sample s;
  s.id = "obj/img";
  s.image.height = h;
  s.image.width = w;
  s.image.pixels = Tensor({h, w, 3});
  s.object_class = 0;
  AffordanceMask m;
  m.height = h;
  m.width = w;
  m.values = Tensor(h, w);
  m.mode = MaskMode::kGroundtruthGray;
  m.class_id = 0;
  s.masks.push_back(std::move(m));
  return s;
}

}  // namespace

TEST_SUITE("core_types") {
  TEST_CASE("validate accepts a well-formed sample") {
    const Sample s = make_sample(32, 32);
    CHECK_NOTHROW(validate(s, 1, 1, 8));
    // Pure: a second pass gives the same verdict.
    CHECK_NOTHROW(validate(s, 1, 1, 8));
  }

  TEST_CASE("validate rejects a mask whose shape disagrees with the image") {
    Sample s = make_sample(32, 32);
    s.masks[0].height = 16;
    s.masks[0].values = Tensor(16, 32);
    CHECK_THROWS_AS(validate(s, 1, 1, 8), Error);
  }

  TEST_CASE("validate rejects out-of-range grayscale values") {
    Sample s = make_sample(32, 32);
    s.masks[0].values.at(3, 3) = 300.0;
    CHECK_THROWS_AS(validate(s, 1, 1, 8), Error);
  }

  TEST_CASE("validate rejects unknown class indices") {
    Sample s = make_sample(32, 32);
    s.masks[0].class_id = 5;
    CHECK_THROWS_AS(validate(s, 1, 1, 8), Error);
    Sample t = make_sample(32, 32);
    t.object_class = 9;
    CHECK_THROWS_AS(validate(t, 1, 1, 8), Error);
  }

  TEST_CASE("validate rejects dimensions indivisible by the patch size") {
    const Sample s = make_sample(30, 32);
    CHECK_THROWS_AS(validate(s, 1, 1, 8), Error);
  }

  TEST_CASE("scale_mask divides by 255 and flips the mode") {
    AffordanceMask m;
    m.height = m.width = 2;
    m.values = Tensor::matrix(2, 2, {0.0, 255.0, 51.0, 0.0});
    m.mode = MaskMode::kGroundtruthGray;

    const AffordanceMask scaled = scale_mask(m);
    CHECK(scaled.mode == MaskMode::kScaled);
    CHECK(scaled.values.at(0, 0) == 0.0);
    CHECK(scaled.values.at(0, 1) == 1.0);
    CHECK(scaled.values.at(1, 0) == 0.2);
  }

  TEST_CASE("scale_mask rejects the wrong input mode") {
    AffordanceMask m;
    m.height = m.width = 1;
    m.values = Tensor(1, 1);
    m.mode = MaskMode::kScaled;
    CHECK_THROWS_AS(scale_mask(m), Error);
  }

  TEST_CASE("scaling then multiplying by 255 is exact for every 8-bit value") {
    AffordanceMask m;
    m.height = 1;
    m.width = 256;
    m.values = Tensor(1, 256);
    for (int v = 0; v < 256; ++v) m.values[v] = static_cast<double>(v);
    m.mode = MaskMode::kGroundtruthGray;
    const AffordanceMask scaled = scale_mask(m);
    for (int v = 0; v < 256; ++v)
      CHECK(scaled.values[v] * 255.0 == static_cast<double>(v));
  }

  TEST_CASE("hyperparameter invariants") {
    Hyperparams hp;
    CHECK_NOTHROW(hp.validate());
    hp.tau1 = 0.0;
    CHECK_THROWS_AS(hp.validate(), Error);
    hp = Hyperparams{};
    hp.lambda2 = -0.1;
    CHECK_THROWS_AS(hp.validate(), Error);
    hp = Hyperparams{};
    hp.iterations = 0;
    CHECK_THROWS_AS(hp.validate(), Error);
  }

  TEST_CASE("label space rejects duplicates and bad object maps") {
    LabelSpace labels;
    labels.affordance_names = {"hold", "hold"};
    labels.object_names = {"cup"};
    CHECK_THROWS_AS(labels.validate(), Error);
    labels.affordance_names = {"hold"};
    labels.object_of_image["x"] = 3;
    CHECK_THROWS_AS(labels.validate(), Error);
  }
}
