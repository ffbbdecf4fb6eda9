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

#include <random>

#include "histaug/png_io.hpp"
#include "histaug/tiling.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace histaug;
using namespace histaug::tiling;

namespace {

Histogram random_histogram(std::mt19937_64& rng) {
  Histogram h{};
  const int occupied = 2 + static_cast<int>(rng() % 12);
  const bool big = rng() % 4 == 0;
  for (int k = 0; k < occupied; ++k) h[rng() % 256] += big ? rng() % 1000000 : 1 + rng() % 20;
  return h;
}

int occupied_bins(const Histogram& h) {
  int n = 0;
  for (auto c : h) n += c > 0;
  return n;
}

RgbImage disk_on_white(int size, double cx, double cy, double r) {
  RgbImage img = make_rgb(size, size, 1.0f);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if ((x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy) < r * r) {
        img.at(0, 0, y, x) = 0.55f;
        img.at(0, 1, y, x) = 0.25f;
        img.at(0, 2, y, x) = 0.6f;
      }
  return img;
}

}  // namespace

TEST_CASE("otsu: two spikes pick the lowest maximizing split") {
  Histogram h{};
  h[10] = 50;
  h[200] = 50;
  const int t = otsu_threshold(h);
  CHECK(t > 10);
  CHECK(t <= 200);
  CHECK(t == *oracle::otsu(h));
  CHECK(t == 11);
}

TEST_CASE("otsu: matches the exhaustive rational scan on random histograms") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const auto h = random_histogram(rng);
    if (occupied_bins(h) < 2) continue;
    CHECK(otsu_threshold(h) == *oracle::otsu(h));
    ++checked;
  }
  CHECK(checked > 250);
}

TEST_CASE("otsu: scaling all counts leaves the threshold unchanged") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    auto h = random_histogram(rng);
    if (occupied_bins(h) < 2) continue;
    auto scaled = h;
    for (auto& c : scaled) c *= 3;
    CHECK(otsu_threshold(h) == otsu_threshold(scaled));
  }
}

TEST_CASE("otsu: degenerate histograms are rejected") {
  Histogram h{};
  h[128] = 4096;
  try {
    otsu_threshold(h);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateHistogram);
  }
  CHECK_THROWS_AS(otsu_threshold(Histogram{}), Error);
}

TEST_CASE("tissue_mask: white image is empty and flagged") {
  const auto m = tissue_mask(make_rgb(16, 16, 1.0f));
  CHECK(m.fraction == 0.0);
  CHECK(m.mask.cast<int>().sum() == 0);
  CHECK(m.rgb_rule_only);
}

TEST_CASE("tissue_mask: dark disk on white is recovered") {
  const auto img = disk_on_white(96, 40.3, 51.7, 25.0);
  const auto m = tissue_mask(img);
  const auto again = tissue_mask(img);
  CHECK((m.mask == again.mask).all());
  int inter = 0, uni = 0;
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) {
      const bool disk = img.at(0, 0, y, x) < 1.0f;
      inter += disk && m.mask(y, x);
      uni += disk || m.mask(y, x);
    }
  CHECK(double(inter) / uni >= 0.95);
  CHECK_FALSE(m.rgb_rule_only);
}

TEST_CASE("tissue_mask: near-white pixels are background even below the Otsu split") {
  RgbImage img = make_rgb(4, 4, 0.85f);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) img.at(0, c, y, x) = 0.95f;
  // Otsu separates 0.85 from 0.95 but both are near-white by the RGB rule.
  const auto m = tissue_mask(img);
  CHECK(m.otsu_threshold.has_value());
  CHECK(m.fraction == 0.0);
}

TEST_CASE("tile_grid: boundary labels follow the strict one-percent rule") {
  // 10x10 tiles of solid tissue; tumor pixel counts 0, 1 (= 1%) and 2 (= 2%).
  RgbImage img = make_rgb(10, 30, 0.4f);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 30; ++x) img.at(0, 0, y, x) = (x + y) % 2 ? 0.4f : 0.2f;
  Mask ann = Mask::Zero(10, 30);
  ann(3, 14) = 1;
  ann(0, 20) = ann(9, 29) = 1;
  TileOptions opt;
  opt.tile_size = 10;
  opt.min_tissue = 0.0;
  const auto tiles = tile_grid(img, ann, opt);
  REQUIRE(tiles.size() == 3);
  CHECK(tiles[0].record.tumor_pixel_ratio == 0.0);
  CHECK(tiles[0].record.label == TissueClass::NonTumor);
  CHECK(tiles[1].record.tumor_pixel_ratio == 0.01);
  CHECK(tiles[1].record.label == TissueClass::NonTumor);
  CHECK(tiles[2].record.tumor_pixel_ratio == 0.02);
  CHECK(tiles[2].record.label == TissueClass::Tumor);
  CHECK(label_for_ratio(0.01) == TissueClass::NonTumor);
  CHECK(label_for_ratio(0.0100001) == TissueClass::Tumor);
}

TEST_CASE("tile_grid: tiles are disjoint, aligned, ordered and filtered by tissue") {
  const auto img = disk_on_white(100, 30, 30, 28);
  Mask ann = Mask::Zero(100, 100);
  TileOptions opt;
  opt.tile_size = 20;
  opt.min_tissue = 0.5;
  opt.source_id = "slide";
  opt.domain_id = 3;
  const auto tiles = tile_grid(img, ann, opt);
  REQUIRE_FALSE(tiles.empty());
  const auto tissue = tissue_mask(img);
  std::vector<std::pair<int, int>> seen;
  for (const auto& t : tiles) {
    const auto& r = t.record;
    seen.emplace_back(r.grid_y, r.grid_x);
    CHECK(r.tissue_fraction >= 0.5);
    CHECK(t.image.pixels.shape == Shape{1, 3, 20, 20});
    CHECK(r.domain_id == 3);
    CHECK(r.file == "tiles/slide_" + std::to_string(r.grid_x) + "_" + std::to_string(r.grid_y) + ".png");
    CHECK(t.image.pixels.at(0, 1, 5, 7) == img.at(0, 1, r.grid_y * 20 + 5, r.grid_x * 20 + 7));
    CHECK(r.tissue_fraction == doctest::Approx(tissue.mask.block(r.grid_y * 20, r.grid_x * 20, 20, 20).cast<double>().mean()));
  }
  CHECK(std::is_sorted(seen.begin(), seen.end()));
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  // Every full grid cell with enough tissue is present.
  int expected = 0;
  for (int gy = 0; gy < 5; ++gy)
    for (int gx = 0; gx < 5; ++gx) expected += tissue.mask.block(gy * 20, gx * 20, 20, 20).cast<double>().mean() >= 0.5;
  CHECK(static_cast<int>(tiles.size()) == expected);
}

TEST_CASE("tile_grid: misaligned annotation is an alignment error") {
  try {
    tile_grid(make_rgb(20, 20, 0.3f), Mask::Zero(20, 19), {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Alignment);
  }
}

TEST_CASE("tile_grid: per-source tumor fraction summary") {
  std::vector<TileRecord> recs(4);
  recs[0].source_id = recs[1].source_id = "a";
  recs[2].source_id = recs[3].source_id = "b";
  recs[0].label = TissueClass::Tumor;
  const auto f = tumor_fraction_by_source(recs);
  CHECK(f.at("a") == 0.5);
  CHECK(f.at("b") == 0.0);
}
