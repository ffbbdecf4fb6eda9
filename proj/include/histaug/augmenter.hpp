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

#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "histaug/dataset.hpp"
#include "histaug/gan.hpp"
#include "histaug/image.hpp"
#include "histaug/trainer.hpp"

namespace histaug::augment {

/// How tiles whose size differs from the trained size are handled.
enum class SizePolicy {
  Strict,
  /// Pad with background around the tile (or split it into a centred grid of
  /// trained-size windows), translate, then crop back to the input extent.
  CenterCropPad,
};

enum class AttributePrior { StandardNormal, DomainGaussian };

/// Target domain draw for stochastic_transform.
enum class DomainMode { Uniform, Interpolate };

struct AugmentOptions {
  SizePolicy size_policy = SizePolicy::CenterCropPad;
  AttributePrior prior = AttributePrior::StandardNormal;
  DomainMode domain_mode = DomainMode::Uniform;
  float pad_value = 1.0f;
};

Eigen::VectorXf sample_attribute(std::mt19937_64& rng);

/// Draw from a per-domain diagonal Gaussian. For mixtures the means and
/// variances of the components are blended with the domain weights.
Eigen::VectorXf sample_attribute(std::mt19937_64& rng, const std::vector<train::AttributeGaussian>& stats,
                                 const gan::DomainVector& domain);

gan::DomainVector interpolate_domains(const gan::DomainVector& a, const gan::DomainVector& b, double t);

/// Fits a diagonal Gaussian to the encoder means of up to `max_per_domain`
/// tiles of each domain.
std::vector<train::AttributeGaussian> fit_attribute_stats(gan::FloatNetworks& nets, const Dataset& data,
                                                          std::size_t max_per_domain = 256);

class Augmenter {
 public:
  explicit Augmenter(train::Checkpoint& checkpoint, AugmentOptions options = {});

  int domain_count() const;
  int image_size() const;

  /// Translates `image` to `domain` with attribute `z`.
  ImageTile augment(const ImageTile& image, const gan::DomainVector& domain, const Eigen::VectorXf& z);

  /// Missing arguments are drawn from `rng`, domain first.
  ImageTile augment(const ImageTile& image, const std::optional<gan::DomainVector>& domain,
                    const std::optional<Eigen::VectorXf>& z, std::mt19937_64& rng);

  gan::DomainVector draw_domain(std::mt19937_64& rng) const;
  Eigen::VectorXf draw_attribute(const gan::DomainVector& domain, std::mt19937_64& rng) const;

  /// With probability `p` the tile is translated to a drawn domain and attribute;
  /// otherwise it is returned unchanged. `applied` reports which branch ran.
  ImageTile stochastic_transform(const ImageTile& image, double p, std::mt19937_64& rng, bool* applied = nullptr);

 private:
  ImageTile translate_window(const ImageTile& window, const gan::DomainVector& domain, const Eigen::VectorXf& z);

  train::Checkpoint& checkpoint_;
  AugmentOptions options_;
};

}  // namespace histaug::augment
