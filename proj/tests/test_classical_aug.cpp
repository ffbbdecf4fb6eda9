// Copyright 2026 The histaug Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <algorithm>
#include <vector>

#include "histaug/classical_aug.hpp"
#include "test_support.hpp"

using namespace histaug;
using namespace histaug::classical;

namespace {

ImageTile random_tile(int size, std::uint64_t seed) {
  ImageTile t;
  t.pixels = test::random_tensor<float>(Shape{1, 3, size, size}, seed);
  t.domain_id = 2;
  t.label = TissueClass::Tumor;
  return t;
}

std::vector<float> sorted_values(const RgbImage& img) {
  std::vector<float> v(img.data.begin(), img.data.end());
  std::sort(v.begin(), v.end());
  return v;
}

bool same(const RgbImage& a, const RgbImage& b) { return a.shape == b.shape && (a.data == b.data).all(); }

}  // namespace

TEST_CASE("geometric: group identities") {
  const auto t = random_tile(7, 1);
  const auto& img = t.pixels;
  CHECK(same(apply(apply(img, Dihedral::Rot90), Dihedral::Rot90), apply(img, Dihedral::Rot180)));
  CHECK(same(apply(apply(img, Dihedral::FlipHorizontal), Dihedral::FlipHorizontal), img));
  CHECK(same(apply(apply(img, Dihedral::FlipVertical), Dihedral::FlipVertical), img));
  CHECK(same(apply(apply(img, Dihedral::Rot90), Dihedral::Rot270), img));
  CHECK(same(apply(apply(img, Dihedral::FlipHorizontal), Dihedral::FlipVertical), apply(img, Dihedral::Rot180)));
  CHECK(same(apply(img, Dihedral::Identity), img));
  // Counter-clockwise: the top-right corner moves to the top-left.
  CHECK(apply(img, Dihedral::Rot90).at(0, 1, 0, 0) == img.at(0, 1, 0, 6));
}

TEST_CASE("geometric: every draw permutes pixels and keeps metadata") {
  const auto t = random_tile(8, 2);
  const auto reference = sorted_values(t.pixels);
  std::mt19937_64 rng(5);
  std::vector<int> hits(kDihedralCount, 0);
  for (int i = 0; i < 600; ++i) {
    const auto out = geometric(t, rng);
    CHECK(sorted_values(out.pixels) == reference);
    CHECK(out.domain_id == 2);
    CHECK(out.label == TissueClass::Tumor);
    for (int op = 0; op < kDihedralCount; ++op)
      if (same(out.pixels, apply(t.pixels, static_cast<Dihedral>(op)))) ++hits[op];
  }
  for (int h : hits) CHECK(h > 60);
}

TEST_CASE("geometric: non-square input is a shape error") {
  ImageTile t;
  t.pixels = make_rgb(4, 6, 0.5f);
  std::mt19937_64 rng(1);
  try {
    geometric(t, rng);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
  }
}

TEST_CASE("hsv_augment: zero probabilities and factors give the identity") {
  const auto t = random_tile(9, 3);
  std::mt19937_64 rng(9);
  CHECK(same(hsv_augment(t, rng, HsvAugConfig::none()).pixels, t.pixels));
}

TEST_CASE("hsv_augment: seeded determinism and range") {
  const auto t = random_tile(16, 4);
  HsvAugConfig always;
  always.blur_probability = always.contrast_brightness_probability = always.hue_saturation_probability = 1.0;
  std::mt19937_64 a(77), b(77);
  for (int i = 0; i < 5; ++i) {
    const auto x = hsv_augment(t, a, always), y = hsv_augment(t, b, always);
    CHECK(same(x.pixels, y.pixels));
    CHECK(x.pixels.data.minCoeff() >= 0.0f);
    CHECK(x.pixels.data.maxCoeff() <= 1.0f);
    CHECK_FALSE(same(x.pixels, t.pixels));
  }
}

TEST_CASE("hsv_augment: hue jitter leaves gray pixels unchanged") {
  ImageTile gray;
  gray.pixels = make_rgb(6, 6);
  std::mt19937_64 fill(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      const float v = u(fill);
      for (int c = 0; c < 3; ++c) gray.pixels.at(0, c, y, x) = v;
    }
  for (double hue : {-0.5, -0.2, 0.13, 0.49})
    for (auto mode : {SaturationJitter::Scale, SaturationJitter::Shift})
      CHECK(same(jitter_hue_saturation(gray.pixels, hue, mode == SaturationJitter::Scale ? 1.4 : 0.0, mode),
                 gray.pixels));
  HsvAugConfig hue_only = HsvAugConfig::none();
  hue_only.hue_saturation_probability = 1.0;
  hue_only.hue_factor = 0.5;
  hue_only.saturation_factor = 0.5;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) CHECK(same(hsv_augment(gray, rng, hue_only).pixels, gray.pixels));
}

TEST_CASE("hsv_augment: hue rotation by a full turn is the identity up to rounding") {
  const auto t = random_tile(8, 6);
  const auto out = jitter_hue_saturation(t.pixels, 1.0, 1.0, SaturationJitter::Scale);
  CHECK((out.data - t.pixels.data).abs().maxCoeff() < 1e-6f);
  // Pure red rotated by a third of the circle becomes pure green.
  RgbImage red = make_rgb(1, 1);
  red.at(0, 0, 0, 0) = 1.0f;
  const auto green = jitter_hue_saturation(red, 1.0 / 3.0, 1.0, SaturationJitter::Scale);
  CHECK(green.at(0, 0, 0, 0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(green.at(0, 1, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("hsv_augment: saturation modes differ as configured") {
  RgbImage px = make_rgb(1, 1);
  px.at(0, 0, 0, 0) = 0.8f;
  px.at(0, 1, 0, 0) = 0.4f;
  px.at(0, 2, 0, 0) = 0.4f;  // s = 0.5, v = 0.8
  const auto scaled = jitter_hue_saturation(px, 0.0, 0.5, SaturationJitter::Scale);
  const auto shifted = jitter_hue_saturation(px, 0.0, -0.25, SaturationJitter::Shift);
  // Both reach s = 0.25: channel minimum is v * (1 - s) = 0.6.
  CHECK(scaled.at(0, 1, 0, 0) == doctest::Approx(0.6));
  CHECK(shifted.at(0, 1, 0, 0) == doctest::Approx(0.6));
}

TEST_CASE("contrast and brightness: closed form") {
  RgbImage img = make_rgb(1, 2);
  for (int c = 0; c < 3; ++c) {
    img.at(0, c, 0, 0) = 0.2f;
    img.at(0, c, 0, 1) = 0.6f;
  }
  const auto out = adjust_contrast_brightness(img, 1.5, 0.05);
  CHECK(out.at(0, 0, 0, 0) == doctest::Approx(0.4 - 0.3 + 0.05));
  CHECK(out.at(0, 2, 0, 1) == doctest::Approx(0.4 + 0.3 + 0.05));
}

TEST_CASE("random_erasing: p = 0 is the identity and p = 1 erases exactly one rectangle") {
  const auto t = random_tile(32, 7);
  std::mt19937_64 rng(10);
  std::optional<Rect> rect;
  CHECK(same(random_erasing(t, rng, 0.0, {}, &rect).pixels, t.pixels));
  CHECK_FALSE(rect.has_value());
  for (int i = 0; i < 50; ++i) {
    const auto out = random_erasing(t, rng, 1.0, {}, &rect);
    REQUIRE(rect.has_value());
    CHECK(rect->top >= 0);
    CHECK(rect->left >= 0);
    CHECK(rect->top + rect->height <= 32);
    CHECK(rect->left + rect->width <= 32);
    int outside_changed = 0;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        const bool inside =
            y >= rect->top && y < rect->top + rect->height && x >= rect->left && x < rect->left + rect->width;
        if (!inside)
          for (int c = 0; c < 3; ++c) outside_changed += out.pixels.at(0, c, y, x) != t.pixels.at(0, c, y, x);
      }
    CHECK(outside_changed == 0);
    CHECK(out.pixels.data.minCoeff() >= 0.0f);
    CHECK(out.pixels.data.maxCoeff() <= 1.0f);
  }
}

TEST_CASE("random_erasing: measured area fraction stays within bounds over 10k draws") {
  std::mt19937_64 rng(123);
  double lo = 1, hi = 0;
  for (int i = 0; i < 10000; ++i) {
    const int h = 8 + static_cast<int>(rng() % 57), w = 8 + static_cast<int>(rng() % 57);
    const auto r = draw_erasing_rect(h, w, rng);
    REQUIRE(r.has_value());
    const double f = double(r->area()) / (double(h) * w);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
    const double aspect = double(r->height) / r->width;
    CHECK((aspect >= 0.3 && aspect <= 3.3));
  }
  MESSAGE("erased fraction range [" << lo << ", " << hi << "]");
  CHECK(lo >= 0.02);
  CHECK(hi <= 0.33);
}

TEST_CASE("random_erasing: invalid probability is rejected") {
  const auto t = random_tile(8, 1);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(random_erasing(t, rng, 1.5), Error);
}
