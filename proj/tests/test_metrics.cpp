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

#include "histaug/error.hpp"
#include "histaug/metrics.hpp"
#include "oracles.hpp"

using namespace histaug;
using namespace histaug::metrics;

TEST_CASE("weighted_ce: closed forms and weight normalization") {
  Eigen::MatrixXd sure(2, 2);
  sure << 20, -20, -20, 20;
  CHECK(weighted_ce(sure, {0, 1}, Eigen::Vector2d(1, 1)) < 1e-3);

  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(5, 2);
  CHECK(weighted_ce(zeros, {0, 1, 1, 0, 1}, Eigen::Vector2d(1, 1)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Eigen::MatrixXd l(3, 2);
  l << 0.3, -1.2, 2.0, 0.5, -0.7, 0.1;
  const std::vector<int> y{0, 1, 1};
  CHECK(weighted_ce(l, y, Eigen::Vector2d(1, 3)) == doctest::Approx(weighted_ce(l, y, Eigen::Vector2d(2, 6))).epsilon(1e-14));
}

TEST_CASE("weighted_ce: non-finite logits are a numeric error") {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(2, 2);
  l(1, 0) = std::nan("");
  try {
    weighted_ce(l, {0, 1}, Eigen::Vector2d(1, 1));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }
}

TEST_CASE("weighted_ce: agrees with the direct formula") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01(0.0, 3.0);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    Eigen::MatrixXd l(n, 2);
    std::vector<std::vector<double>> rows(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < 2; ++k) rows[i].push_back(l(i, k) = n01(rng));
      y[i] = static_cast<int>(rng() % 2);
    }
    const std::vector<double> w{u(rng), u(rng)};
    CHECK(std::abs(weighted_ce(l, y, Eigen::Vector2d(w[0], w[1])) - static_cast<double>(oracle::weighted_ce(rows, y, w))) <
          1e-10);
  }
}

TEST_CASE("inverse_frequency_weights") {
  const Eigen::VectorXd w = inverse_frequency_weights({0, 0, 0, 1}, 2);
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(1.5));
  CHECK_THROWS_AS(inverse_frequency_weights({0, 0}, 2), Error);
}

TEST_CASE("pr_auc: closed forms") {
  CHECK(pr_auc({0.9, 0.8, 0.3, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(pr_auc({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}) == doctest::Approx(1.0 * 0.5 + (2.0 / 3.0) * 0.5));
  // All scores tied: one threshold, precision equals prevalence.
  CHECK(pr_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 0}) == doctest::Approx(0.25));
}

TEST_CASE("pr_auc: single-class labels are undefined") {
  try {
    pr_auc({0.1, 0.2}, {1, 1});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UndefinedMetric);
  }
}

TEST_CASE("pr_auc: matches the exhaustive threshold scan and is rank invariant") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 15);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 6) / 5.0;  // coarse grid: many ties
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    const double ap = pr_auc(s, y);
    CHECK(ap == oracle::pr_auc(s, y).convert_to<double>());
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = std::exp(3 * s[i]) - 7;
    CHECK(pr_auc(t, y) == ap);
  }
}

TEST_CASE("pr_auc: large inputs fall back to the floating sum") {
  std::mt19937_64 rng(8);
  std::vector<double> s(400);
  std::vector<int> y(400);
  for (int i = 0; i < 400; ++i) {
    s[i] = static_cast<double>(rng() % 1000);
    y[i] = static_cast<int>(rng() % 3 == 0);
  }
  CHECK(std::abs(pr_auc(s, y) - oracle::pr_auc(s, y).convert_to<double>()) < 1e-12);
}

TEST_CASE("pr_auc: random scores approach the prevalence") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 100000;
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    s[i] = u(rng);
    y[i] = i % 2;
  }
  CHECK(std::abs(pr_auc(s, y) - 0.5) < 0.01);
}

TEST_CASE("f1_tumor: closed forms and exact agreement") {
  CHECK(f1_tumor({1, 0, 1}, {1, 0, 1}) == 1.0);
  CHECK(f1_tumor({0, 0, 0}, {1, 0, 1}) == 0.0);
  // TP = 3, FP = 1, FN = 2.
  CHECK(f1_tumor({1, 1, 1, 1, 0, 0, 0}, {1, 1, 1, 0, 1, 1, 0}) == doctest::Approx(2 * 0.75 * 0.6 / 1.35));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    std::vector<int> p(n), y(n);
    for (int i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng() % 2);
      y[i] = static_cast<int>(rng() % 2);
    }
    CHECK(f1_tumor(p, y) == oracle::f1(p, y).convert_to<double>());
  }
}

TEST_CASE("mean_std: population deviation") {
  const auto m = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.std == doctest::Approx(std::sqrt(1.25)));
}
