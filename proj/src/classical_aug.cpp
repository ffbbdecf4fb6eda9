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

#include "histaug/classical_aug.hpp"

#include <cmath>
#include <vector>

#include "histaug/color.hpp"
#include "histaug/error.hpp"

namespace histaug::classical {
namespace {

// Source coordinate for output (y, x) of an n x n image.
std::pair<int, int> source_of(Dihedral op, int y, int x, int n) {
  switch (op) {
    case Dihedral::Identity: return {y, x};
    case Dihedral::FlipHorizontal: return {y, n - 1 - x};
    case Dihedral::FlipVertical: return {n - 1 - y, x};
    case Dihedral::Rot90: return {x, n - 1 - y};
    case Dihedral::Rot180: return {n - 1 - y, n - 1 - x};
    case Dihedral::Rot270: return {n - 1 - x, y};
  }
  return {y, x};
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool fits(const ErasingConfig& c, int h, int w, int height, int width) {
  if (h < 1 || w < 1 || h > height || w > width) return false;
  const double fraction = double(h) * w / (double(height) * width);
  const double aspect = double(h) / w;
  return fraction >= c.min_area && fraction <= c.max_area && aspect >= c.min_aspect && aspect <= c.max_aspect;
}

}  // namespace

RgbImage apply(const RgbImage& image, Dihedral op) {
  const Shape s = image.shape;
  require(s.h == s.w, ErrorKind::Shape, "geometric transforms need a square tile, got " + to_string(s));
  RgbImage out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          const auto [sy, sx] = source_of(op, y, x, s.h);
          out.at(n, c, y, x) = image.at(n, c, sy, sx);
        }
  return out;
}

Mask apply(const Mask& mask, Dihedral op) {
  require(mask.rows() == mask.cols(), ErrorKind::Shape, "geometric transforms need a square mask");
  const int n = static_cast<int>(mask.rows());
  Mask out(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const auto [sy, sx] = source_of(op, y, x, n);
      out(y, x) = mask(sy, sx);
    }
  return out;
}

ImageTile geometric(const ImageTile& tile, std::mt19937_64& rng) {
  const auto op = static_cast<Dihedral>(std::uniform_int_distribution<int>(0, kDihedralCount - 1)(rng));
  ImageTile out = tile;
  out.pixels = apply(tile.pixels, op);
  return out;
}

void HsvAugConfig::validate() const {
  for (double p : {blur_probability, contrast_brightness_probability, hue_saturation_probability})
    require(p >= 0 && p <= 1, ErrorKind::Parameter, "augmentation probabilities must lie in [0, 1]");
  require(blur_sigma_min > 0 && blur_sigma_max >= blur_sigma_min, ErrorKind::Parameter,
          "blur sigma range must be positive and ordered");
  require(contrast_factor >= 0 && contrast_factor <= 1, ErrorKind::Parameter, "contrast factor must lie in [0, 1]");
  require(brightness_shift >= 0 && hue_factor >= 0 && hue_factor <= 0.5 && saturation_factor >= 0,
          ErrorKind::Parameter, "jitter factors must be nonnegative, hue factor at most 0.5");
}

HsvAugConfig HsvAugConfig::none() {
  HsvAugConfig c;
  c.blur_probability = c.contrast_brightness_probability = c.hue_saturation_probability = 0;
  c.contrast_factor = c.brightness_shift = c.hue_factor = c.saturation_factor = 0;
  return c;
}

RgbImage jitter_hue_saturation(const RgbImage& image, double hue_offset, double saturation_value,
                               SaturationJitter mode) {
  RgbImage out(image.shape);
  const auto plane = image.shape.plane();
  for (int n = 0; n < image.shape.n; ++n) {
    const float* src = image.ptr() + Eigen::Index(n) * image.shape.sample_size();
    float* dst = out.ptr() + Eigen::Index(n) * image.shape.sample_size();
    for (Eigen::Index i = 0; i < plane; ++i) {
      Eigen::Vector3d hsv = color::rgb_to_hsv({src[i], src[i + plane], src[i + 2 * plane]});
      hsv[0] += hue_offset;
      hsv[1] = mode == SaturationJitter::Scale ? hsv[1] * saturation_value : hsv[1] + saturation_value;
      hsv[1] = std::clamp(hsv[1], 0.0, 1.0);
      const Eigen::Vector3d rgb = color::hsv_to_rgb(hsv);
      for (int c = 0; c < 3; ++c) dst[i + c * plane] = std::clamp(static_cast<float>(rgb[c]), 0.0f, 1.0f);
    }
  }
  return out;
}

RgbImage adjust_contrast_brightness(const RgbImage& image, double contrast, double brightness) {
  const double mean = luminance(image).cast<double>().mean();
  RgbImage out(image.shape);
  out.data = ((image.data.cast<double>() - mean) * contrast + mean + brightness).cast<float>();
  return clamp01(std::move(out));
}

ImageTile hsv_augment(const ImageTile& tile, std::mt19937_64& rng, const HsvAugConfig& config) {
  config.validate();
  ImageTile out = tile;
  if (uniform(rng, 0, 1) < config.blur_probability)
    out.pixels = clamp01(gaussian_blur(out.pixels, uniform(rng, config.blur_sigma_min, config.blur_sigma_max)));
  if (uniform(rng, 0, 1) < config.contrast_brightness_probability) {
    const double contrast = uniform(rng, 1 - config.contrast_factor, 1 + config.contrast_factor);
    const double brightness = uniform(rng, -config.brightness_shift, config.brightness_shift);
    out.pixels = adjust_contrast_brightness(out.pixels, contrast, brightness);
  }
  if (uniform(rng, 0, 1) < config.hue_saturation_probability) {
    const double hue = uniform(rng, -config.hue_factor, config.hue_factor);
    const double f = config.saturation_factor;
    const double sat = config.saturation_mode == SaturationJitter::Scale ? uniform(rng, 1 - f, 1 + f) : uniform(rng, -f, f);
    out.pixels = jitter_hue_saturation(out.pixels, hue, sat, config.saturation_mode);
  }
  return out;
}

void ErasingConfig::validate() const {
  require(min_area > 0 && min_area <= max_area && max_area <= 1, ErrorKind::Parameter,
          "erasing area bounds must satisfy 0 < min <= max <= 1");
  require(min_aspect > 0 && min_aspect <= max_aspect, ErrorKind::Parameter, "erasing aspect bounds must be ordered");
  require(max_attempts >= 1, ErrorKind::Parameter, "max_attempts must be >= 1");
}

std::optional<Rect> draw_erasing_rect(int height, int width, std::mt19937_64& rng, const ErasingConfig& config) {
  config.validate();
  const double area = double(height) * width;
  const auto place = [&](int h, int w) {
    Rect r;
    r.height = h;
    r.width = w;
    r.top = std::uniform_int_distribution<int>(0, height - h)(rng);
    r.left = std::uniform_int_distribution<int>(0, width - w)(rng);
    return r;
  };
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    const double target = uniform(rng, config.min_area, config.max_area) * area;
    const double aspect = std::exp(uniform(rng, std::log(config.min_aspect), std::log(config.max_aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int w = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (fits(config, h, w, height, width)) return place(h, w);
  }
  // Rounding on small images can reject every draw; fall back to the exact feasible set.
  std::vector<std::pair<int, int>> feasible;
  for (int h = 1; h <= height; ++h)
    for (int w = 1; w <= width; ++w)
      if (fits(config, h, w, height, width)) feasible.emplace_back(h, w);
  if (feasible.empty()) return std::nullopt;
  const auto [h, w] = feasible[std::uniform_int_distribution<std::size_t>(0, feasible.size() - 1)(rng)];
  return place(h, w);
}

ImageTile random_erasing(const ImageTile& tile, std::mt19937_64& rng, double p, const ErasingConfig& config,
                         std::optional<Rect>* erased) {
  require(p >= 0 && p <= 1, ErrorKind::Parameter, "erasing probability must lie in [0, 1]");
  if (erased) erased->reset();
  ImageTile out = tile;
  if (!(uniform(rng, 0, 1) < p)) return out;
  const auto rect = draw_erasing_rect(tile.height(), tile.width(), rng, config);
  if (!rect) return out;
  std::uniform_real_distribution<float> noise(0.0f, 1.0f);
  for (int c = 0; c < 3; ++c)
    for (int y = rect->top; y < rect->top + rect->height; ++y)
      for (int x = rect->left; x < rect->left + rect->width; ++x) out.pixels.at(0, c, y, x) = noise(rng);
  if (erased) *erased = rect;
  return out;
}

}  // namespace histaug::classical
