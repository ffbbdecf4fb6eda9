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

#include <cmath>

#include "histaug/plot.hpp"
#include "histaug/png_io.hpp"
#include "histaug/ssim.hpp"
#include "test_support.hpp"

using namespace histaug;

TEST_CASE("ssim: identical planes score 1") {
  const auto t = test::random_tensor<float>(Shape{1, 3, 20, 20}, 3);
  CHECK(luminance_ssim(t, t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim: matches a reference Gaussian-window implementation") {
  Plane a(24, 24), b(24, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) {
      const double v = ((x * 37 + y * 11) % 64) / 63.0;
      a(y, x) = static_cast<float>(v);
      b(y, x) = static_cast<float>(std::clamp(0.8 * static_cast<float>(v) + 0.1 + 0.05 * std::sin(x * 0.7 + y * 0.3), 0.0, 1.0));
    }
  // scikit-image structural_similarity(gaussian_weights=True, sigma=1.5,
  // use_sample_covariance=False, data_range=1) on the same planes.
  CHECK(ssim(a, b) == doctest::Approx(0.968299873595).epsilon(1e-6));
}

TEST_CASE("ssim: lower for unrelated structure, symmetric, size checked") {
  const auto a = test::random_tensor<float>(Shape{1, 3, 32, 32}, 1);
  const auto b = test::random_tensor<float>(Shape{1, 3, 32, 32}, 2);
  CHECK(luminance_ssim(a, b) < 0.3);
  CHECK(luminance_ssim(a, b) == doctest::Approx(luminance_ssim(b, a)).epsilon(1e-12));
  CHECK_THROWS_AS(ssim(Plane::Zero(8, 8), Plane::Zero(8, 8)), Error);
  CHECK_THROWS_AS(ssim(Plane::Zero(20, 20), Plane::Zero(20, 21)), Error);
}

TEST_CASE("plot: scatter and bar chart write readable images") {
  const auto dir = test::scratch_dir("plot");
  Eigen::MatrixX2d xy(30, 2);
  std::vector<int> groups;
  for (int i = 0; i < 30; ++i) {
    xy.row(i) << std::cos(i), std::sin(2.0 * i);
    groups.push_back(i % 3);
  }
  plot::scatter_png(dir / "scatter.png", xy, groups, {"center0", "center1", "center2"}, "mLD 0.5");
  const RgbImage s = read_png(dir / "scatter.png");
  CHECK(s.shape.w == 720);
  CHECK((s.data < 0.99f).count() > 500);

  plot::bar_chart_png(dir / "bars.png", {{"center0", {0.5, 0.7, 0.9}, {0.1, 0.0, 0.05}}, {"center1", {0.2, 0.4, std::nan("")}, {}}},
                      {"geometric", "hsv", "histaugan"}, "PR-AUC");
  CHECK(read_png(dir / "bars.png").shape.h > 100);
  CHECK_THROWS_AS(plot::bar_chart_png(dir / "bad.png", {{"x", {0.5}, {}}}, {"a", "b"}, "t"), Error);
}
