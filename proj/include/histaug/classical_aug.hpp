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

#pragma once

// Conventional augmentations: dihedral flips/rotations, HSV-style color
// jitter with blur and contrast perturbation, and random erasing.

#include <optional>
#include <random>

#include "histaug/image.hpp"

namespace histaug::classical {

enum class Dihedral { Identity, FlipHorizontal, FlipVertical, Rot90, Rot180, Rot270 };

inline constexpr int kDihedralCount = 6;

/// Rotations are counter-clockwise. Square images only.
RgbImage apply(const RgbImage& image, Dihedral op);
Mask apply(const Mask& mask, Dihedral op);

/// Draws one of the six transforms uniformly.
ImageTile geometric(const ImageTile& tile, std::mt19937_64& rng);

enum class SaturationJitter {
  /// s' = s * U[1 - f, 1 + f]
  Scale,
  /// s' = s + U[-f, f]
  Shift,
};

struct HsvAugConfig {
  double blur_probability = 0.25;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  double contrast_brightness_probability = 0.5;
  /// Contrast factor drawn from [1 - c, 1 + c].
  double contrast_factor = 0.25;
  /// Brightness offset drawn from [-b, b].
  double brightness_shift = 0.1;
  double hue_saturation_probability = 0.5;
  /// Hue offset drawn from [-h, h] turns of the hue circle.
  double hue_factor = 0.5;
  double saturation_factor = 0.5;
  SaturationJitter saturation_mode = SaturationJitter::Scale;

  void validate() const;
  /// Every probability and factor set to zero.
  static HsvAugConfig none();
};

/// Hue rotation and saturation change applied per pixel in HSV space.
RgbImage jitter_hue_saturation(const RgbImage& image, double hue_offset, double saturation_value,
                               SaturationJitter mode);

/// (x - m) * contrast + m + brightness, m the mean luminance, clamped to [0, 1].
RgbImage adjust_contrast_brightness(const RgbImage& image, double contrast, double brightness);

ImageTile hsv_augment(const ImageTile& tile, std::mt19937_64& rng, const HsvAugConfig& config = {});

struct Rect {
  int top = 0, left = 0, height = 0, width = 0;
  int area() const { return height * width; }
};

struct ErasingConfig {
  double min_area = 0.02;
  double max_area = 0.33;
  double min_aspect = 0.3;
  double max_aspect = 3.3;
  int max_attempts = 100;

  void validate() const;
};

/// A rectangle whose area fraction and height/width ratio both lie within the
/// configured bounds, or nothing if the image is too small to hold one.
std::optional<Rect> draw_erasing_rect(int height, int width, std::mt19937_64& rng, const ErasingConfig& config = {});

/// With probability `p` fills one rectangle with uniform noise. `erased`
/// receives the rectangle when one was drawn.
ImageTile random_erasing(const ImageTile& tile, std::mt19937_64& rng, double p, const ErasingConfig& config = {},
                         std::optional<Rect>* erased = nullptr);

}  // namespace histaug::classical
