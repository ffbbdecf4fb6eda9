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

#include "histaug/batch_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "histaug/color.hpp"
#include "histaug/error.hpp"

namespace histaug::batch {

ColorStats color_stats(const RgbImage& image) {
  using namespace histaug::color;
  validate_rgb(image);
  const auto px = image.sample(0);
  ColorStats sum = ColorStats::Zero();
  for (Eigen::Index p = 0; p < px.cols(); ++p) {
    const Vec3 rgb(px(0, p), px(1, p), px(2, p));
    sum.segment<3>(0) += rgb;
    sum.segment<3>(3) += rgb_to_hsv(rgb);
    sum.segment<3>(6) += rgb_to_lab(rgb);
    sum.segment<3>(9) += rgb_to_hed(rgb);
    sum[12] += rgb_to_gray(rgb);
  }
  return sum / static_cast<double>(px.cols());
}

Eigen::MatrixXd color_stats(const std::vector<ImageTile>& tiles) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(tiles.size()), kColorStatDim);
  for (std::size_t i = 0; i < tiles.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = color_stats(tiles[i].pixels);
  return out;
}

std::vector<EmbeddedPoint> embed_2d(const Eigen::MatrixXd& stats, const std::vector<int>& domains,
                                    const EmbedParams& params) {
  require(static_cast<std::size_t>(stats.rows()) == domains.size(), ErrorKind::Shape,
          "embedding needs one domain label per row of statistics");
  require(stats.allFinite(), ErrorKind::Numeric, "color statistics contain non-finite values");
  Eigen::MatrixX2d xy;
  if (params.method == EmbeddingMethod::Pca) {
    require(stats.rows() >= 1, ErrorKind::Parameter, "PCA embedding needs at least one point");
    xy = umap::pca_2d(stats);
  } else {
    xy = umap::embed(stats, params.umap);
  }
  std::vector<EmbeddedPoint> out(domains.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out[i] = {xy(r, 0), xy(r, 1), domains[i]};
  }
  return out;
}

Eigen::MatrixX2d coordinates(const std::vector<EmbeddedPoint>& points) {
  Eigen::MatrixX2d xy(static_cast<Eigen::Index>(points.size()), 2);
  for (std::size_t i = 0; i < points.size(); ++i) xy.row(static_cast<Eigen::Index>(i)) << points[i].x, points[i].y;
  return xy;
}

Eigen::VectorXd local_diversity(const Eigen::MatrixXd& points, const std::vector<int>& labels, int domain_count,
                                int k) {
  require(domain_count >= 2, ErrorKind::DegenerateLabels,
          "local diversity needs at least 2 domains, got " + std::to_string(domain_count));
  require(k >= 1, ErrorKind::Parameter, "k must be positive");
  const auto n = points.rows();
  require(static_cast<std::size_t>(n) == labels.size(), ErrorKind::Shape, "one label per point is required");
  require(n >= k + 1, ErrorKind::Parameter,
          "local diversity with k = " + std::to_string(k) + " needs at least " + std::to_string(k + 1) + " points");
  for (int l : labels)
    require(l >= 0 && l < domain_count, ErrorKind::Domain, "label " + std::to_string(l) + " outside [0, D)");

  const double log_d = std::log(static_cast<double>(domain_count));
  Eigen::VectorXd out(n);
  std::vector<std::pair<double, Eigen::Index>> row;
  row.reserve(static_cast<std::size_t>(n));
  std::vector<int> counts(static_cast<std::size_t>(domain_count));
  for (Eigen::Index i = 0; i < n; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) row.emplace_back((points.row(i) - points.row(j)).squaredNorm(), j);
    std::partial_sort(row.begin(), row.begin() + k, row.end());
    std::fill(counts.begin(), counts.end(), 0);
    for (int m = 0; m < k; ++m) ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(row[m].second)])];
    double h = 0;
    for (int c : counts)
      if (c > 0) {
        const double p = static_cast<double>(c) / k;
        h -= p * std::log(p);
      }
    out[i] = std::clamp(h / log_d, 0.0, 1.0);
  }
  return out;
}

double mld(const Eigen::MatrixXd& points, const std::vector<int>& labels, int domain_count, int k) {
  return local_diversity(points, labels, domain_count, k).mean();
}

}  // namespace histaug::batch
