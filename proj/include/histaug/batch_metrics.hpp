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

// Batch-effect measurements: per-tile color statistics, a 2-D embedding of
// them, and the mean local diversity of domain labels in that embedding.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "histaug/image.hpp"
#include "histaug/umap.hpp"

namespace histaug::batch {

inline constexpr int kColorStatDim = 13;

/// Mean of each channel in this order.
inline constexpr std::array<const char*, kColorStatDim> kColorStatNames{
    "rgb_r", "rgb_g", "rgb_b", "hsv_h", "hsv_s", "hsv_v", "lab_l", "lab_a", "lab_b", "hed_h", "hed_e", "hed_d", "gray"};

using ColorStats = Eigen::Matrix<double, kColorStatDim, 1>;

ColorStats color_stats(const RgbImage& image);

/// One row per tile.
Eigen::MatrixXd color_stats(const std::vector<ImageTile>& tiles);

enum class EmbeddingMethod { Umap, Pca };

struct EmbedParams {
  EmbeddingMethod method = EmbeddingMethod::Umap;
  umap::Params umap;
};

struct EmbeddedPoint {
  double x = 0.0;
  double y = 0.0;
  int domain_id = 0;
};

std::vector<EmbeddedPoint> embed_2d(const Eigen::MatrixXd& stats, const std::vector<int>& domains,
                                    const EmbedParams& params);

Eigen::MatrixX2d coordinates(const std::vector<EmbeddedPoint>& points);

/// Shannon equitability of the domain labels among each point's k nearest
/// neighbours (itself excluded, ties by index), normalized by ln(domain_count).
Eigen::VectorXd local_diversity(const Eigen::MatrixXd& points, const std::vector<int>& labels, int domain_count,
                                int k = 10);

double mld(const Eigen::MatrixXd& points, const std::vector<int>& labels, int domain_count, int k = 10);

}  // namespace histaug::batch
