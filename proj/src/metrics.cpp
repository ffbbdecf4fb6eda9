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

#include "histaug/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>

#include "histaug/error.hpp"

namespace histaug::metrics {

double weighted_ce(const Eigen::MatrixXd& logits, const std::vector<int>& labels, const Eigen::VectorXd& class_weights) {
  const auto n = logits.rows(), k = logits.cols();
  require(n > 0 && static_cast<std::size_t>(n) == labels.size(), ErrorKind::Shape, "one label per logit row is required");
  require(class_weights.size() == k, ErrorKind::Shape, "one weight per class is required");
  require((class_weights.array() > 0).all() && class_weights.allFinite(), ErrorKind::Parameter,
          "class weights must be positive");
  require(logits.allFinite(), ErrorKind::Numeric, "non-finite logits");
  const Eigen::VectorXd w = class_weights / class_weights.mean();
  double total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < k, ErrorKind::Range, "label " + std::to_string(y) + " outside the class range");
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    total += w[y] * (lse - logits(i, y));
  }
  return total / static_cast<double>(n);
}

Eigen::VectorXd inverse_frequency_weights(const std::vector<int>& labels, int classes) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(classes);
  for (int y : labels) {
    require(y >= 0 && y < classes, ErrorKind::Range, "label outside the class range");
    counts[y] += 1;
  }
  require((counts.array() > 0).all(), ErrorKind::DegenerateLabels, "every class needs at least one example");
  const Eigen::VectorXd w = counts.cwiseInverse();
  return w / w.mean();
}

namespace {

// Running sum of non-negative fractions in 128-bit integers; gives up on overflow.
class ExactSum {
 public:
  using U = unsigned __int128;

  void add(std::uint64_t num, std::uint64_t den) {
    if (!ok_) return;
    const U g = gcd(num, den);
    const U n = num / g, d = den / g;
    const U common = gcd(den_, d);
    const U f1 = d / common, f2 = den_ / common;
    U a, b, new_den, sum;
    if (__builtin_mul_overflow(num_, f1, &a) || __builtin_mul_overflow(n, f2, &b) ||
        __builtin_mul_overflow(den_, f1, &new_den) || __builtin_add_overflow(a, b, &sum)) {
      ok_ = false;
      return;
    }
    const U r = gcd(sum, new_den);
    num_ = sum / r;
    den_ = new_den / r;
  }

  /// Correctly rounded value when numerator and denominator are exact doubles.
  std::optional<double> value() const {
    constexpr U kExact = U(1) << 53;
    if (!ok_ || num_ > kExact || den_ > kExact) return std::nullopt;
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

 private:
  static U gcd(U a, U b) {
    while (b != 0) {
      const U t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  U num_ = 0, den_ = 1;
  bool ok_ = true;
};

}  // namespace

double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  require(scores.size() == labels.size(), ErrorKind::Shape, "scores and labels differ in length");
  long positives = 0;
  for (int y : labels) {
    require(y == 0 || y == 1, ErrorKind::Range, "labels must be binary");
    positives += y;
  }
  const long negatives = static_cast<long>(labels.size()) - positives;
  require(positives > 0 && negatives > 0, ErrorKind::UndefinedMetric,
          "PR-AUC needs at least one positive and one negative label");
  for (double s : scores) require(std::isfinite(s), ErrorKind::Numeric, "non-finite score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  // AP = sum over thresholds of (dTP / P) * (TP / (TP + FP)). The sum is kept
  // as a reduced fraction while it fits, so small inputs round only once.
  ExactSum exact;
  double ap = 0;
  long tp = 0, fp = 0, prev_tp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (labels[order[i]] ? tp : fp) += 1;
    const bool group_end = i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]];
    if (!group_end || tp == prev_tp) continue;
    ap += static_cast<double>(tp - prev_tp) / positives * (static_cast<double>(tp) / (tp + fp));
    exact.add(static_cast<std::uint64_t>((tp - prev_tp) * tp), static_cast<std::uint64_t>(positives * (tp + fp)));
    prev_tp = tp;
  }
  if (const auto v = exact.value()) return *v;
  return ap;
}

Confusion confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
  require(predictions.size() == labels.size(), ErrorKind::Shape, "predictions and labels differ in length");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require((predictions[i] == 0 || predictions[i] == 1) && (labels[i] == 0 || labels[i] == 1), ErrorKind::Range,
            "predictions and labels must be binary");
    if (predictions[i] && labels[i]) ++c.tp;
    else if (predictions[i]) ++c.fp;
    else if (labels[i]) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_tumor(const std::vector<int>& predictions, const std::vector<int>& labels) {
  const Confusion c = confusion(predictions, labels);
  // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN); both are 0 when TP is 0.
  if (c.tp == 0) return 0.0;
  return 2.0 * c.tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

MeanStd mean_std(const std::vector<double>& values) {
  require(!values.empty(), ErrorKind::Parameter, "mean of an empty list");
  const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
  const double m = v.mean();
  return {m, std::sqrt((v.array() - m).square().mean())};
}

}  // namespace histaug::metrics
