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

// Uniform manifold approximation and projection to two dimensions: fuzzy
// k-nearest-neighbour graph plus a cross-entropy layout optimized by SGD with
// negative sampling.

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace histaug::umap {

struct Params {
  int n_neighbors = 15;
  double min_dist = 0.1;
  double spread = 1.0;
  /// 0 selects 500 epochs up to 10000 points and 200 beyond.
  int epochs = 0;
  double learning_rate = 1.0;
  int negative_sample_rate = 5;
  double repulsion_strength = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Curve parameters (a, b) with 1 / (1 + a d^{2b}) fitted to the min_dist/spread target.
std::pair<double, double> fit_ab(double spread, double min_dist);

/// Exact k nearest neighbours per row, self first, ties broken by index.
struct KnnGraph {
  Eigen::MatrixXi indices;
  Eigen::MatrixXd distances;
};
KnnGraph knn(const Eigen::MatrixXd& points, int k);

/// Symmetric fuzzy membership graph as (i, j, w) triplets with i < j.
struct Edge {
  int i, j;
  double weight;
};
std::vector<Edge> fuzzy_graph(const KnnGraph& graph);

/// Rows of `points` projected onto the top two principal axes.
Eigen::MatrixX2d pca_2d(const Eigen::MatrixXd& points);

Eigen::MatrixX2d embed(const Eigen::MatrixXd& points, const Params& params);

}  // namespace histaug::umap
