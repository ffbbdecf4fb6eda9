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

#include "histaug/umap.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "histaug/error.hpp"

namespace histaug::umap {
namespace {

constexpr double kMinKDistScale = 1e-3;
constexpr double kSmoothTolerance = 1e-5;
constexpr double kGradientClip = 4.0;

double clip(double v) { return std::clamp(v, -kGradientClip, kGradientClip); }

struct Smoothing {
  double rho;
  double sigma;
};

// Per-row bandwidth so the neighbour memberships sum to log2(k).
Smoothing smooth_row(const Eigen::RowVectorXd& dist, double mean_all) {
  const int k = static_cast<int>(dist.size());
  const double target = std::log2(static_cast<double>(k));
  double rho = 0;
  for (int j = 1; j < k; ++j)
    if (dist[j] > 0) {
      rho = dist[j];
      break;
    }
  double lo = 0, hi = std::numeric_limits<double>::infinity(), mid = 1;
  for (int it = 0; it < 64; ++it) {
    double psum = 0;
    for (int j = 1; j < k; ++j) {
      const double d = dist[j] - rho;
      psum += d > 0 ? std::exp(-d / mid) : 1.0;
    }
    if (std::abs(psum - target) < kSmoothTolerance) break;
    if (psum > target) {
      hi = mid;
      mid = (lo + hi) / 2;
    } else {
      lo = mid;
      mid = std::isinf(hi) ? mid * 2 : (lo + hi) / 2;
    }
  }
  const double floor = kMinKDistScale * (rho > 0 ? dist.mean() : mean_all);
  return {rho, std::max(mid, floor)};
}

}  // namespace

void Params::validate() const {
  require(n_neighbors >= 2, ErrorKind::Parameter, "n_neighbors must be >= 2");
  require(min_dist >= 0 && spread > 0 && min_dist <= spread, ErrorKind::Parameter,
          "min_dist must lie in [0, spread] with spread > 0");
  require(epochs >= 0 && learning_rate > 0 && negative_sample_rate >= 0 && repulsion_strength >= 0,
          ErrorKind::Parameter, "invalid optimization parameters");
}

std::pair<double, double> fit_ab(double spread, double min_dist) {
  constexpr int kSamples = 300;
  Eigen::VectorXd x(kSamples), y(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    x[i] = 3.0 * spread * i / (kSamples - 1);
    y[i] = x[i] < min_dist ? 1.0 : std::exp(-(x[i] - min_dist) / spread);
  }
  const auto residuals = [&](double a, double b, Eigen::MatrixX2d* jac) {
    Eigen::VectorXd r(kSamples);
    for (int i = 0; i < kSamples; ++i) {
      const double p = x[i] > 0 ? std::pow(x[i], 2 * b) : 0.0;
      const double denom = 1 + a * p;
      r[i] = 1 / denom - y[i];
      if (jac) {
        (*jac)(i, 0) = -p / (denom * denom);
        (*jac)(i, 1) = x[i] > 0 ? -a * p * 2 * std::log(x[i]) / (denom * denom) : 0.0;
      }
    }
    return r;
  };
  // Levenberg-Marquardt from (1, 1).
  double a = 1, b = 1, lambda = 1e-3;
  Eigen::MatrixX2d jac(kSamples, 2);
  Eigen::VectorXd r = residuals(a, b, &jac);
  double cost = r.squaredNorm();
  for (int it = 0; it < 500; ++it) {
    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d g = jac.transpose() * r;
    Eigen::Matrix2d damped = jtj;
    damped.diagonal() *= 1 + lambda;
    const Eigen::Vector2d step = damped.ldlt().solve(-g);
    const double na = a + step[0], nb = b + step[1];
    const Eigen::VectorXd nr = residuals(na, nb, nullptr);
    const double ncost = nr.squaredNorm();
    if (ncost < cost) {
      a = na;
      b = nb;
      lambda = std::max(lambda / 10, 1e-12);
      const bool converged = cost - ncost < 1e-15 * std::max(cost, 1e-300);
      cost = ncost;
      r = residuals(a, b, &jac);
      if (converged) break;
    } else {
      lambda *= 10;
      if (lambda > 1e12) break;
    }
  }
  return {a, b};
}

KnnGraph knn(const Eigen::MatrixXd& points, int k) {
  const auto n = points.rows();
  require(k >= 1 && k <= n, ErrorKind::Parameter,
          "need at least " + std::to_string(k) + " points for the neighbour graph, got " + std::to_string(n));
  KnnGraph g{Eigen::MatrixXi(n, k), Eigen::MatrixXd(n, k)};
  std::vector<std::pair<double, int>> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      row[j] = {j == i ? -1.0 : (points.row(i) - points.row(j)).squaredNorm(), static_cast<int>(j)};
    std::partial_sort(row.begin(), row.begin() + k, row.end());
    for (int m = 0; m < k; ++m) {
      g.indices(i, m) = row[m].second;
      g.distances(i, m) = m == 0 ? 0.0 : std::sqrt(row[m].first);
    }
  }
  return g;
}

std::vector<Edge> fuzzy_graph(const KnnGraph& graph) {
  const auto n = graph.indices.rows();
  const int k = static_cast<int>(graph.indices.cols());
  const double mean_all = graph.distances.mean();
  std::map<std::pair<int, int>, double> directed;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = smooth_row(graph.distances.row(i), mean_all);
    for (int m = 1; m < k; ++m) {
      const double d = graph.distances(i, m) - s.rho;
      directed[{static_cast<int>(i), graph.indices(i, m)}] = d <= 0 || s.sigma == 0 ? 1.0 : std::exp(-d / s.sigma);
    }
  }
  // Fuzzy union: w_ij + w_ji - w_ij w_ji.
  std::map<std::pair<int, int>, double> sym;
  for (const auto& [key, w] : directed) {
    const auto [i, j] = key;
    const auto rev = directed.find({j, i});
    const double wr = rev == directed.end() ? 0.0 : rev->second;
    sym[{std::min(i, j), std::max(i, j)}] = w + wr - w * wr;
  }
  std::vector<Edge> out;
  out.reserve(sym.size());
  for (const auto& [key, w] : sym) out.push_back({key.first, key.second, w});
  return out;
}

Eigen::MatrixX2d pca_2d(const Eigen::MatrixXd& points) {
  require(points.rows() >= 1 && points.cols() >= 2, ErrorKind::Parameter, "PCA needs at least two features");
  const Eigen::MatrixXd centered = points.rowwise() - points.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const auto d = cov.cols();
  Eigen::MatrixXd axes(d, 2);
  axes.col(0) = eig.eigenvectors().col(d - 1);
  axes.col(1) = eig.eigenvectors().col(d - 2);
  // Fix the sign so the largest-magnitude loading is positive.
  for (int c = 0; c < 2; ++c) {
    Eigen::Index at;
    axes.col(c).cwiseAbs().maxCoeff(&at);
    if (axes(at, c) < 0) axes.col(c) *= -1;
  }
  return centered * axes;
}

Eigen::MatrixX2d embed(const Eigen::MatrixXd& points, const Params& params) {
  params.validate();
  const auto n = points.rows();
  require(n > params.n_neighbors, ErrorKind::Parameter,
          "embedding needs more than n_neighbors = " + std::to_string(params.n_neighbors) + " points, got " +
              std::to_string(n));
  const int epochs = params.epochs > 0 ? params.epochs : (n <= 10000 ? 500 : 200);
  const auto [a, b] = fit_ab(params.spread, params.min_dist);

  auto edges = fuzzy_graph(knn(points, params.n_neighbors));
  double max_w = 0;
  for (const auto& e : edges) max_w = std::max(max_w, e.weight);
  std::erase_if(edges, [&](const Edge& e) { return e.weight < max_w / epochs; });

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixX2d y = pca_2d(points);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c) y(i, c) += 1e-4 * normal(rng);
  for (int c = 0; c < 2; ++c) {
    const double lo = y.col(c).minCoeff(), hi = y.col(c).maxCoeff();
    if (hi > lo)
      y.col(c) = ((y.col(c).array() - lo) * (10.0 / (hi - lo))).matrix();
    else
      y.col(c).setZero();
  }

  // Both directions of every undirected edge are sampled, as head and tail.
  struct Sample {
    int head, tail;
    double every, next, every_negative, next_negative;
  };
  std::vector<Sample> samples;
  samples.reserve(2 * edges.size());
  for (const auto& e : edges) {
    const double every = max_w / e.weight;
    const double neg = params.negative_sample_rate > 0 ? every / params.negative_sample_rate : 0.0;
    samples.push_back({e.i, e.j, every, every, neg, neg});
    samples.push_back({e.j, e.i, every, every, neg, neg});
  }

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double alpha = params.learning_rate * (1.0 - static_cast<double>(epoch) / epochs);
    for (auto& s : samples) {
      if (s.next > epoch) continue;
      const Eigen::Vector2d diff = (y.row(s.head) - y.row(s.tail)).transpose();
      const double d2 = diff.squaredNorm();
      double coeff = 0;
      if (d2 > 0) coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
      for (int c = 0; c < 2; ++c) {
        const double g = clip(coeff * diff[c]);
        y(s.head, c) += g * alpha;
        y(s.tail, c) -= g * alpha;
      }
      s.next += s.every;

      if (params.negative_sample_rate == 0) continue;
      const int negatives = static_cast<int>((epoch - s.next_negative) / s.every_negative);
      for (int p = 0; p < negatives; ++p) {
        const auto other = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
        if (other == s.head) continue;
        const Eigen::Vector2d nd = (y.row(s.head) - y.row(other)).transpose();
        const double nd2 = nd.squaredNorm();
        double rep = 0;
        if (nd2 > 0) rep = 2.0 * params.repulsion_strength * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
        for (int c = 0; c < 2; ++c) y(s.head, c) += (rep > 0 ? clip(rep * nd[c]) : kGradientClip) * alpha;
      }
      s.next_negative += negatives * s.every_negative;
    }
  }
  return y;
}

}  // namespace histaug::umap
