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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "histaug/augmenter.hpp"
#include "histaug/autodiff.hpp"
#include "histaug/classical_aug.hpp"
#include "histaug/dataset.hpp"
#include "histaug/nn.hpp"
#include "histaug/trainer.hpp"

namespace histaug::clf {

enum class Strategy { Geometric, Hsv, HistAuGan };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct ClassifierConfig {
  std::string architecture = "cnn6";
  int image_size = 64;
  int channels = 8;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;
  /// Held out from the training domain for in-domain testing.
  double test_fraction = 0.2;
  /// Fraction of the remaining training-domain tiles used for model selection.
  double validation_fraction = 0.2;
  double erasing_probability = 0.5;
  double histaugan_probability = 0.5;

  void validate() const;
};

nlohmann::json to_json(const ClassifierConfig& c);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j);

/// Five stride-2 3x3 convolutions with leaky ReLU, global average pooling
/// and a two-way linear head.
template <typename Scalar>
struct Cnn6 {
  std::vector<nn::Conv2d<Scalar>> convs;
  nn::Linear<Scalar> head;

  Cnn6() = default;
  Cnn6(int channels, std::mt19937_64& rng) {
    const int widths[] = {channels, channels, 2 * channels, 2 * channels, 4 * channels};
    int in = 3;
    for (int i = 0; i < 5; ++i) {
      convs.emplace_back("cnn.conv" + std::to_string(i), in, widths[i], 3, i == 0 ? 1 : 2, 1, rng);
      in = widths[i];
    }
    head = nn::Linear<Scalar>("cnn.head", in, 2, rng);
  }

  ad::Var<Scalar> operator()(ad::Var<Scalar> x) {
    for (auto& conv : convs) x = ad::leaky_relu(conv(x), Scalar(0.1));
    return head(ad::global_avg_pool(x));
  }

  void collect(nn::ParamList<Scalar>& out) {
    for (auto& c : convs) c.collect(out);
    head.collect(out);
  }
};

class Classifier {
 public:
  explicit Classifier(const ClassifierConfig& config);

  const ClassifierConfig& config() const { return config_; }
  nn::ParamList<float> params() { nn::ParamList<float> out; net_.collect(out); return out; }

  /// Logits, one row per tile, for tiles of the configured size.
  Eigen::MatrixXd logits(const std::vector<const ImageTile*>& tiles);
  /// Softmax probability of the tumor class.
  std::vector<double> scores(const std::vector<const ImageTile*>& tiles);

  /// One Adam step on the weighted cross-entropy of a minibatch.
  double train_step(const std::vector<ImageTile>& batch, const Eigen::VectorXd& class_weights, nn::Adam<float>& adam);

  void save(const std::filesystem::path& dir) const;
  static Classifier load(const std::filesystem::path& dir);

 private:
  ClassifierConfig config_;
  Cnn6<float> net_;
};

struct Split {
  std::vector<int> train, validation, test;
};

/// Label-stratified split of `indices` into test, validation and training parts.
Split stratified_split(const Dataset& data, const std::vector<int>& indices, double test_fraction,
                       double validation_fraction, std::mt19937_64& rng);

struct ExperimentSpec {
  std::string train_domain;
  Strategy strategy = Strategy::Geometric;
  int repeats = 1;
  ClassifierConfig classifier;

  void validate() const;
};

nlohmann::json to_json(const ExperimentSpec& s);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);

/// Geometric transform, then the strategy's color augmentation, then random erasing.
ImageTile augment_for_training(const ImageTile& tile, Strategy strategy, const ClassifierConfig& config,
                               augment::Augmenter* gan, std::mt19937_64& rng);

struct TrainedClassifier {
  Classifier model;
  int best_epoch = -1;
  double best_validation_f1 = 0.0;
};

/// Trains for a fixed epoch budget and keeps the parameters of the epoch with
/// the best validation F1 (earliest on ties).
TrainedClassifier train_classifier(const Dataset& data, const Split& split, Strategy strategy,
                                   const ClassifierConfig& config, augment::Augmenter* gan, std::uint64_t seed);

struct DomainMetrics {
  std::string test_domain;
  bool in_domain = false;
  double pr_auc = 0.0;
  double f1 = 0.0;
};

/// PR-AUC and tumor F1 (argmax decision) on the given tile subset.
DomainMetrics evaluate_subset(Classifier& model, const Dataset& data, const std::vector<int>& indices);

struct RunResult {
  int repeat = 0;
  std::vector<DomainMetrics> domains;
};

struct Aggregate {
  /// Mean over repeats, per test domain, in dataset domain order.
  std::vector<DomainMetrics> mean_over_repeats;
  double ood_pr_auc_mean = 0.0, ood_pr_auc_std = 0.0;
  double ood_f1_mean = 0.0, ood_f1_std = 0.0;
};

struct EvalResult {
  ExperimentSpec spec;
  std::vector<RunResult> runs;
  Aggregate aggregate;
};

/// Mean over repeats per domain; mean and population std across the
/// out-of-domain centers of those means.
Aggregate aggregate(const std::vector<RunResult>& runs);

/// Trains `repeats` classifiers on the training domain and evaluates each on
/// the held-out in-domain test split and on every other domain. `gan` is
/// required for the histaugan strategy. When `model_dir` is set, repeat r is
/// saved to `model_dir/repeat_r`.
EvalResult run_experiment(const ExperimentSpec& spec, const Dataset& data, train::Checkpoint* gan,
                          const std::filesystem::path& model_dir = {});

/// Evaluation of a saved model on every domain of `data` (all tiles).
std::vector<DomainMetrics> evaluate(Classifier& model, const Dataset& data);

std::string results_csv_header();
std::string results_csv_rows(const EvalResult& result);
void write_results_csv(const std::filesystem::path& path, const std::vector<EvalResult>& results);

}  // namespace histaug::clf
