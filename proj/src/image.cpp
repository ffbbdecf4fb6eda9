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

#include "histaug/image.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "histaug/error.hpp"

namespace histaug {

const char* to_string(TissueClass c) { return c == TissueClass::Tumor ? "tumor" : "non-tumor"; }

TissueClass tissue_class_from_string(const std::string& s) {
  if (s == "tumor" || s == "1") return TissueClass::Tumor;
  if (s == "non-tumor" || s == "0") return TissueClass::NonTumor;
  fail(ErrorKind::InputValidation, "unknown tissue class '" + s + "'");
}

RgbImage make_rgb(int height, int width, float fill) {
  return Tensorf::constant(Shape{1, 3, height, width}, fill);
}

void validate_rgb(const RgbImage& image) {
  require(image.shape.n == 1 && image.shape.c == 3, ErrorKind::InputValidation,
          "expected a single 3-channel image, got " + to_string(image.shape));
  require(image.shape.h > 0 && image.shape.w > 0, ErrorKind::InputValidation, "empty image");
  require(image.all_finite(), ErrorKind::InputValidation, "image contains non-finite values");
  require((image.data >= 0.0f).all() && (image.data <= 1.0f).all(), ErrorKind::InputValidation,
          "image values outside [0, 1]");
}

void validate_tile(const ImageTile& tile, int domain_count) {
  validate_rgb(tile.pixels);
  require(tile.height() == tile.width(), ErrorKind::InputValidation,
          "tile must be square, got " + to_string(tile.pixels.shape));
  require(tile.domain_id >= 0 && tile.domain_id < domain_count, ErrorKind::InputValidation,
          "domain id " + std::to_string(tile.domain_id) + " outside [0, " + std::to_string(domain_count) + ")");
}

Plane luminance(const RgbImage& image) {
  const int h = image.shape.h, w = image.shape.w;
  const auto plane = image.shape.plane();
  Plane out(h, w);
  Eigen::Map<ArrayX<float>> flat(out.data(), plane);
  flat = 0.2125f * image.data.segment(0, plane) + 0.7154f * image.data.segment(plane, plane) +
         0.0721f * image.data.segment(2 * plane, plane);
  return out;
}

RgbImage crop(const RgbImage& image, int top, int left, int height, int width, float fill) {
  RgbImage out = make_rgb(height, width, fill);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < height; ++y) {
      const int sy = top + y;
      if (sy < 0 || sy >= image.shape.h) continue;
      for (int x = 0; x < width; ++x) {
        const int sx = left + x;
        if (sx < 0 || sx >= image.shape.w) continue;
        out.at(0, c, y, x) = image.at(0, c, sy, sx);
      }
    }
  return out;
}

RgbImage clamp01(RgbImage image) {
  image.data = image.data.max(0.0f).min(1.0f);
  return image;
}

Plane gaussian_blur(const Plane& in, double sigma) {
  require(sigma > 0, ErrorKind::Parameter, "blur sigma must be positive");
  const int radius = std::max(1, static_cast<int>(std::ceil(4 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= total;
  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  Plane tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * in(y, std::clamp(x + i, 0, w - 1));
      tmp(y, x) = static_cast<float>(acc);
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp(std::clamp(y + i, 0, h - 1), x);
      out(y, x) = static_cast<float>(acc);
    }
  return out;
}

RgbImage gaussian_blur(const RgbImage& image, double sigma) {
  const Shape s = image.shape;
  RgbImage out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const Eigen::Index offset = (Eigen::Index(n) * s.c + c) * s.plane();
      Eigen::Map<const Plane> plane(image.ptr() + offset, s.h, s.w);
      Eigen::Map<Plane>(out.ptr() + offset, s.h, s.w) = gaussian_blur(Plane(plane), sigma);
    }
  return out;
}

}  // namespace histaug
