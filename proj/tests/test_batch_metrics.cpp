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

#include <doctest.h>

#include <cmath>
#include <random>

#include "histaug/batch_metrics.hpp"
#include "histaug/color.hpp"
#include "oracles.hpp"

using namespace histaug;
using namespace histaug::batch;

namespace {

RgbImage formula_image() {
  RgbImage im = make_rgb(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      im.at(0, 0, y, x) = static_cast<float>(((x * 37 + y * 11) % 64) / 63.0);
      im.at(0, 1, y, x) = static_cast<float>(((x * 13 + y * 29) % 64) / 63.0);
      im.at(0, 2, y, x) = static_cast<float>(((x * 7 + y * 41 + 5) % 64) / 63.0);
    }
  return im;
}

Eigen::MatrixXd blobs(int per_blob, int dim, double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd pts(2 * per_blob, dim);
  for (int i = 0; i < 2 * per_blob; ++i)
    for (int c = 0; c < dim; ++c) pts(i, c) = n01(rng) + (i >= per_blob && c == 0 ? separation : 0.0);
  return pts;
}

double oracle_mld(const Eigen::MatrixXd& pts, const std::vector<int>& labels, int d, int k) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(pts.rows()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (Eigen::Index c = 0; c < pts.cols(); ++c) rows[i].push_back(pts(i, c));
  return oracle::mean_local_diversity(rows, labels, d, k);
}

// Query point at the origin with ten neighbours on the x axis.
double centre_diversity(const std::vector<int>& neighbour_labels, int d) {
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(11, 2);
  std::vector<int> labels{0};
  for (int i = 0; i < 10; ++i) {
    pts(i + 1, 0) = 1.0 + i;
    labels.push_back(neighbour_labels[i]);
  }
  return local_diversity(pts, labels, d)[0];
}

}  // namespace

TEST_CASE("color_stats: uniform gray") {
  const ColorStats s = color_stats(make_rgb(4, 4, 0.5f));
  CHECK(s.size() == 13);
  for (int c = 0; c < 3; ++c) CHECK(s[c] == doctest::Approx(0.5));
  CHECK(s[4] == 0.0);
  CHECK(s[5] == doctest::Approx(0.5));
  CHECK(s[12] == doctest::Approx(0.5));
}

TEST_CASE("color_stats: fixed image matches a per-pixel reference conversion") {
  // Means of the channel conversions computed with scikit-image for the same formula image.
  const double expected[13] = {0.476190476, 0.492063492, 0.476190476, 0.484244531, 0.668301848,
                               0.73735119,  56.1788463,  5.10386096,  5.30605081,  0.151465723,
                               0.0266984358, 0.115674344, 0.487546032};
  const ColorStats s = color_stats(formula_image());
  for (int c = 0; c < 13; ++c) {
    INFO(kColorStatNames[c]);
    CHECK(std::abs(s[c] - expected[c]) < 1e-4);
  }
}

TEST_CASE("color_stats: HSV round trip for in-gamut colors") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const color::Vec3 rgb(u(rng), u(rng), u(rng));
    CHECK((color::hsv_to_rgb(color::rgb_to_hsv(rgb)) - rgb).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("umap: curve parameters for the default spread and min_dist") {
  const auto [a, b] = umap::fit_ab(1.0, 0.1);
  CHECK(a == doctest::Approx(1.577).epsilon(2e-3));
  CHECK(b == doctest::Approx(0.895).epsilon(2e-3));
}

TEST_CASE("umap: neighbour graph lists self first and is symmetric after the fuzzy union") {
  const Eigen::MatrixXd pts = blobs(20, 3, 5.0, 1);
  const auto g = umap::knn(pts, 5);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    CHECK(g.indices(i, 0) == i);
    for (int m = 2; m < 5; ++m) CHECK(g.distances(i, m) >= g.distances(i, m - 1));
  }
  for (const auto& e : umap::fuzzy_graph(g)) {
    CHECK(e.i < e.j);
    CHECK(e.weight > 0.0);
    CHECK(e.weight <= 1.0 + 1e-12);
  }
}

TEST_CASE("embed_2d: count, determinism and blob separation") {
  const Eigen::MatrixXd pts = blobs(100, 13, 12.0, 2);
  std::vector<int> domains(200);
  for (int i = 0; i < 200; ++i) domains[i] = i / 100;
  EmbedParams p;
  p.umap.seed = 9;
  p.umap.epochs = 200;
  const auto a = embed_2d(pts, domains, p);
  const auto b = embed_2d(pts, domains, p);
  REQUIRE(a.size() == 200);
  const Eigen::MatrixX2d xa = coordinates(a), xb = coordinates(b);
  CHECK(xa == xb);
  CHECK(xa.allFinite());

  const Eigen::RowVector2d c0 = xa.topRows(100).colwise().mean(), c1 = xa.bottomRows(100).colwise().mean();
  const double intra =
      ((xa.topRows(100).rowwise() - c0).rowwise().norm().mean() + (xa.bottomRows(100).rowwise() - c1).rowwise().norm().mean()) / 2;
  CHECK((c0 - c1).norm() > 3 * intra);
}

TEST_CASE("embed_2d: too few points is a parameter error") {
  const Eigen::MatrixXd pts = blobs(5, 13, 1.0, 3);
  try {
    embed_2d(pts, std::vector<int>(10, 0), EmbedParams{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parameter);
  }
}

TEST_CASE("embed_2d: PCA fallback recovers a dominant axis") {
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(30, 13);
  for (int i = 0; i < 30; ++i) {
    pts(i, 3) = i;
    pts(i, 7) = 0.01 * ((i * 7) % 5);
  }
  EmbedParams p;
  p.method = EmbeddingMethod::Pca;
  const Eigen::MatrixX2d xy = coordinates(embed_2d(pts, std::vector<int>(30, 0), p));
  for (int i = 0; i < 30; ++i) CHECK(std::abs(xy(i, 0) - (i - 14.5)) < 1e-3);
}

TEST_CASE("local_diversity: closed-form neighbourhoods") {
  CHECK(centre_diversity({1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, 5) == 0.0);
  CHECK(centre_diversity({0, 1, 2, 3, 4, 0, 1, 2, 3, 4}, 5) == doctest::Approx(1.0));
  CHECK(centre_diversity({0, 0, 0, 0, 0, 3, 3, 3, 3, 3}, 5) == doctest::Approx(std::log(2.0) / std::log(5.0)));
  CHECK(std::log(2.0) / std::log(5.0) == doctest::Approx(0.4307).epsilon(1e-4));
}

TEST_CASE("local_diversity: agrees with the brute-force reference on random data") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coord(0, 6), lab(0, 3);
  // Integer grid coordinates force many exact distance ties.
  Eigen::MatrixXd pts(150, 2);
  std::vector<int> labels(150);
  for (int i = 0; i < 150; ++i) {
    pts(i, 0) = coord(rng);
    pts(i, 1) = coord(rng);
    labels[i] = lab(rng);
  }
  CHECK(mld(pts, labels, 4) == doctest::Approx(oracle_mld(pts, labels, 4, 10)).epsilon(1e-12));
  CHECK(mld(pts, labels, 4, 3) == doctest::Approx(oracle_mld(pts, labels, 4, 3)).epsilon(1e-12));
}

TEST_CASE("mld: random labels reach the multinomial expectation, disjoint clusters stay near zero") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 5000;
  Eigen::MatrixXd pts(n, 2);
  std::vector<int> random_labels(n), cluster_labels(n);
  for (int i = 0; i < n; ++i) {
    random_labels[i] = static_cast<int>(rng() % 5);
    cluster_labels[i] = i % 5;
    pts(i, 0) = u(rng);
    pts(i, 1) = u(rng);
  }
  // With k = 10 and D = 5 the exact expectation for i.i.d. uniform labels is 0.8546, the ceiling for
  // well-mixed data; the Monte-Carlo mean over 5000 points lands within 0.01 of it.
  const double expected = oracle::expected_uniform_equitability(10, 5);
  CHECK(expected == doctest::Approx(0.8546).epsilon(1e-4));
  CHECK(std::abs(mld(pts, random_labels, 5) - expected) < 0.01);
  CHECK(mld(pts, std::vector<int>(n, 2), 5) == 0.0);

  Eigen::MatrixXd clustered = pts;
  for (int i = 0; i < n; ++i) clustered(i, 0) += 100.0 * cluster_labels[i];
  CHECK(mld(clustered, cluster_labels, 5) < 0.05);
}

TEST_CASE("mld: permutation invariance and interleaving") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd pts(200, 2);
  std::vector<int> labels(200);
  for (int i = 0; i < 200; ++i) {
    labels[i] = i < 100 ? 0 : 1;
    pts(i, 0) = n01(rng) + (i < 100 ? 0.0 : 20.0);
    pts(i, 1) = n01(rng);
  }
  const double separated = mld(pts, labels, 2);

  std::vector<int> perm(200);
  for (int i = 0; i < 200; ++i) perm[i] = (i * 77) % 200;
  Eigen::MatrixXd shuffled(200, 2);
  std::vector<int> shuffled_labels(200);
  for (int i = 0; i < 200; ++i) {
    shuffled.row(i) = pts.row(perm[i]);
    shuffled_labels[i] = labels[perm[i]];
  }
  CHECK(mld(shuffled, shuffled_labels, 2) == doctest::Approx(separated).epsilon(1e-12));

  Eigen::MatrixXd interleaved = pts;
  for (int i = 100; i < 200; ++i) interleaved(i, 0) -= 20.0;
  CHECK(mld(interleaved, labels, 2) > separated);
}

TEST_CASE("local_diversity: fewer than two domains is a degenerate-label error") {
  const Eigen::MatrixXd pts = Eigen::MatrixXd::Random(20, 2);
  try {
    local_diversity(pts, std::vector<int>(20, 0), 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateLabels);
  }
}
