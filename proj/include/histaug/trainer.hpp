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

// Alternating adversarial optimization of the translation networks, with
// on-disk checkpoints that capture everything needed to resume bit-exactly.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "histaug/dataset.hpp"
#include "histaug/gan.hpp"

namespace histaug::train {

struct TrainConfig {
  gan::GanConfig model;
  gan::LossWeights weights;
  int iterations = 2000;
  /// Tiles per step; even, split into cross-domain pairs.
  int batch_size = 8;
  double lr_discriminator = 1e-4;
  double lr_translation = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  int checkpoint_every = 500;

  int image_size() const { return model.image_size; }
  int domain_count() const { return model.domains; }
  void validate() const;
};

nlohmann::json to_json(const gan::GanConfig& c);
gan::GanConfig gan_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const gan::LossWeights& w);
gan::LossWeights loss_weights_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct Optimizers {
  nn::Adam<float> content_discriminator;
  nn::Adam<float> domain_discriminator;
  nn::Adam<float> translation;

  Optimizers(gan::Networks<float>& nets, const TrainConfig& cfg);
};

/// Diagonal Gaussian over attribute codes of one domain.
struct AttributeGaussian {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

struct Checkpoint {
  TrainConfig config;
  std::vector<std::string> domain_names;
  std::int64_t iteration = 0;
  std::unique_ptr<gan::Networks<float>> networks;
  std::unique_ptr<Optimizers> optimizers;
  std::mt19937_64 rng;
  /// Per-domain attribute fits; empty unless computed after training.
  std::vector<AttributeGaussian> attribute_stats;

  static Checkpoint fresh(const TrainConfig& config, std::vector<std::string> domain_names);
  void save(const std::filesystem::path& dir) const;
  static Checkpoint load(const std::filesystem::path& dir);
};

enum class StepPhase { ContentDiscriminator, DomainDiscriminator, Translation };

/// One alternating update. `probe` is called after each of the three updates.
gan::LossBreakdown training_step(const gan::TranslationBatch<float>& batch, gan::Networks<float>& nets,
                                 Optimizers& optimizers, const TrainConfig& config, std::mt19937_64& rng,
                                 const std::function<void(StepPhase)>& probe = {});

/// Cross-domain pairs: an unordered domain pair is drawn uniformly per pair,
/// then one tile uniformly from each side.
gan::TranslationBatch<float> sample_batch(const Dataset& data, const std::vector<std::vector<int>>& by_domain,
                                          int batch_size, std::mt19937_64& rng);

void check_dataset(const Dataset& data, const TrainConfig& config);

struct TrainOptions {
  std::filesystem::path out_dir;
  /// Continue from this checkpoint instead of a fresh initialization.
  std::filesystem::path resume_from;
  std::function<void(std::int64_t, const gan::LossBreakdown&)> on_step;
};

/// Writes `out_dir/checkpoints/iter_NNNNNN`, `out_dir/checkpoint` (final) and
/// `out_dir/train_log.csv`.
Checkpoint train(const Dataset& data, const TrainConfig& config, const TrainOptions& options);

std::string log_header();
std::string log_row(std::int64_t iteration, const gan::LossBreakdown& b);

/// Self-reconstruction L1 averaged over the given tiles.
double reconstruction_l1(gan::Networks<float>& nets, const Dataset& data, const std::vector<int>& indices);

}  // namespace histaug::train
