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

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>

#include "histaug/tensor.hpp"

namespace histaug {

/// RGB raster stored as a {1, 3, h, w} tensor with values in [0, 1].
using RgbImage = Tensorf;

/// Row-major binary raster (0 or 1).
using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-major single-channel float raster.
using Plane = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class TissueClass { NonTumor = 0, Tumor = 1 };

const char* to_string(TissueClass c);
TissueClass tissue_class_from_string(const std::string& s);

struct ImageTile {
  RgbImage pixels;
  int domain_id = 0;
  std::optional<TissueClass> label;

  int height() const { return pixels.shape.h; }
  int width() const { return pixels.shape.w; }
};

RgbImage make_rgb(int height, int width, float fill = 0.0f);

/// Throws InputValidation when the raster is not a finite [0,1] 3-channel image.
void validate_rgb(const RgbImage& image);

/// Full tile check: square, finite, in range, domain id in [0, domain_count).
void validate_tile(const ImageTile& tile, int domain_count);

/// Per-pixel luminance (0.2125 R + 0.7154 G + 0.0721 B).
Plane luminance(const RgbImage& image);

/// Copies a window; pixels outside the source are filled with `fill`.
RgbImage crop(const RgbImage& image, int top, int left, int height, int width, float fill = 1.0f);

RgbImage clamp01(RgbImage image);

/// Separable Gaussian filter, kernel truncated at 4 sigma, edge pixels replicated.
Plane gaussian_blur(const Plane& plane, double sigma);
RgbImage gaussian_blur(const RgbImage& image, double sigma);

}  // namespace histaug
