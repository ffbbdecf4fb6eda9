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

#include <Eigen/Core>

#include <vector>

namespace histaug::metrics {

/// Mean over rows of -w_y log softmax(logits)_y. The weights are rescaled to
/// average 1 over the classes before use.
double weighted_ce(const Eigen::MatrixXd& logits, const std::vector<int>& labels, const Eigen::VectorXd& class_weights);

/// Inverse class frequency, rescaled to average 1 over the classes.
Eigen::VectorXd inverse_frequency_weights(const std::vector<int>& labels, int classes);

/// Average precision: sum over distinct score thresholds (descending) of
/// (R_i - R_{i-1}) * P_i, with tied scores entering together.
double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct Confusion {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};
Confusion confusion(const std::vector<int>& predictions, const std::vector<int>& labels);

/// F1 of the positive (tumor) class; 0 when precision + recall is 0.
double f1_tumor(const std::vector<int>& predictions, const std::vector<int>& labels);

struct MeanStd {
  double mean = 0.0;
  /// Population standard deviation.
  double std = 0.0;
};
MeanStd mean_std(const std::vector<double>& values);

}  // namespace histaug::metrics
