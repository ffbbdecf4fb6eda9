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

// Deterministic toy multi-domain "histology" generator.
//
// Tiles are rendered from stain-concentration maps (hematoxylin-rich
// nuclei on an eosin-stained textured background) through a Beer-Lambert
// model, then pushed through a per-domain color style. Structure and
// style come from independent seed streams; the tumor class is purely
// morphological (a dense cluster of enlarged nuclei) and never chromatic.

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "histaug/dataset.hpp"
#include "histaug/image.hpp"

namespace histaug::synth {

struct SynthConfig {
  int domains = 5;
  int tiles_per_domain = 200;
  int size = 64;
  std::uint64_t seed = 0;
  double tumor_prevalence = 0.3;
  /// Same structure stream for tile i in every domain.
  bool shared_structures = false;
};

/// Stain concentrations and tumor mask for one tile, independent of domain.
struct Structure {
  Plane hematoxylin;
  Plane eosin;
  Mask tumor;
  int nuclei = 0;
};

/// Per-domain color appearance.
struct DomainStyle {
  double stain_scale = 1.0;
  double hue_shift = 0.0;
  double saturation_scale = 1.0;
  double value_scale = 1.0;
  double noise_sigma = 0.0;
  double blur_sigma = 0.0;
  /// Applied last as rgb' = color_matrix * rgb + color_offset.
  Eigen::Matrix3d color_matrix = Eigen::Matrix3d::Identity();
  Eigen::Vector3d color_offset = Eigen::Vector3d::Zero();
};

Structure make_structure(int size, bool tumor, std::uint64_t seed);
DomainStyle make_style(int domain, int domains, std::uint64_t seed);

/// Renders a structure under a domain style; `seed` drives per-tile jitter and noise.
RgbImage render(const Structure& structure, const DomainStyle& style, std::uint64_t seed);

struct SynthData {
  Dataset dataset;
  std::vector<Mask> masks;  // aligned with dataset.tiles
  std::vector<DomainStyle> styles;
};

SynthData generate(const SynthConfig& config);

/// Saves the dataset plus `masks/*.png`.
void save(const std::filesystem::path& dir, const SynthData& data);

}  // namespace histaug::synth
