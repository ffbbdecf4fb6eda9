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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "histaug/image.hpp"

namespace histaug {

/// One labeled tile as listed in a manifest. The label follows the
/// strict rule tumor <=> tumor_pixel_ratio > 0.01.
struct TileRecord {
  std::string file;
  std::string source_id;
  int grid_x = 0;
  int grid_y = 0;
  TissueClass label = TissueClass::NonTumor;
  double tumor_pixel_ratio = 0.0;
  double tissue_fraction = 1.0;
  int domain_id = 0;
};

inline constexpr double kTumorRatioThreshold = 0.01;

inline TissueClass label_for_ratio(double tumor_pixel_ratio) {
  return tumor_pixel_ratio > kTumorRatioThreshold ? TissueClass::Tumor : TissueClass::NonTumor;
}

/// Same rule on exact pixel counts, free of rounding at the boundary.
inline TissueClass label_for_counts(std::int64_t tumor_pixels, std::int64_t total_pixels) {
  return tumor_pixels * 100 > total_pixels ? TissueClass::Tumor : TissueClass::NonTumor;
}

/// `file,source_id,grid_x,grid_y,label,tumor_pixel_ratio,tissue_fraction,domain_id`
void write_manifest(const std::filesystem::path& path, const std::vector<TileRecord>& records);
std::vector<TileRecord> read_manifest(const std::filesystem::path& path);

/// Tiles held in memory alongside their records and domain names.
struct Dataset {
  std::vector<std::string> domain_names;
  std::vector<ImageTile> tiles;
  std::vector<TileRecord> records;

  int domain_count() const { return static_cast<int>(domain_names.size()); }
  std::size_t size() const { return tiles.size(); }
  std::vector<std::vector<int>> indices_by_domain() const;
  int domain_index(const std::string& name) const;
  Dataset subset(const std::vector<int>& indices) const;
};

/// Writes `tiles/*.png`, `manifest.csv` and `domains.txt` under `dir`.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

/// Loads a directory written by save_dataset (or any dir with the same layout).
Dataset load_dataset(const std::filesystem::path& dir);
/// Tiles resolved against `base_dir`; `domains.txt` is looked up next to the
/// manifest, then in `base_dir`.
Dataset load_dataset(const std::filesystem::path& base_dir, const std::filesystem::path& manifest);

std::vector<std::string> read_domain_names(const std::filesystem::path& path);
void write_domain_names(const std::filesystem::path& path, const std::vector<std::string>& names);

/// Splits a CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);

std::string format_double(double v, int precision = 6);

}  // namespace histaug
