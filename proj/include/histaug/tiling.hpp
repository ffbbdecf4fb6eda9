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

// Tissue detection and grid tiling of large stained rasters with aligned
// tumor annotations.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "histaug/dataset.hpp"
#include "histaug/image.hpp"

namespace histaug::tiling {

using Histogram = std::array<std::uint64_t, 256>;

/// Threshold t in [1, 255] splitting the histogram into bins < t and bins >= t
/// with maximal between-class variance; the lowest t wins ties. Comparisons are
/// exact. Throws DegenerateHistogram when fewer than two bins are occupied.
int otsu_threshold(const Histogram& histogram);

/// 8-bit gray levels round(255 * gray) of an RGB image.
Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> gray_levels(const RgbImage& image);
Histogram histogram(const RgbImage& image);

struct TissueMaskOptions {
  /// A pixel is background when min(R, G, B) exceeds this level.
  double white_level = 0.8;
};

struct TissueMask {
  Mask mask;
  double fraction = 0.0;
  std::optional<int> otsu_threshold;
  /// Set when the gray histogram was degenerate and only the RGB rule applied.
  bool rgb_rule_only = false;
};

/// Foreground = not near-white AND gray level below the image's Otsu threshold.
TissueMask tissue_mask(const RgbImage& image, const TissueMaskOptions& options = {});

struct TileOptions {
  int tile_size = 512;
  double min_tissue = 0.5;
  std::string source_id = "source";
  int domain_id = 0;
  TissueMaskOptions tissue;

  void validate() const;
};

struct Tile {
  ImageTile image;
  Mask annotation;
  TileRecord record;
};

/// Non-overlapping grid of full tiles in (grid_y, grid_x) order; a tile is kept
/// when its tissue fraction reaches min_tissue.
std::vector<Tile> tile_grid(const RgbImage& image, const Mask& annotation, const TileOptions& options);

/// Tumor-tile fraction per source id, for dataset sanity reports.
std::map<std::string, double> tumor_fraction_by_source(const std::vector<TileRecord>& records);

}  // namespace histaug::tiling
