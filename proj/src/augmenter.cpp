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

#include "histaug/augmenter.hpp"

#include <algorithm>
#include <cmath>

#include "histaug/error.hpp"

namespace histaug::augment {

Eigen::VectorXf sample_attribute(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXf z(gan::kAttributeDim);
  for (int i = 0; i < gan::kAttributeDim; ++i) z[i] = static_cast<float>(normal(rng));
  return z;
}

Eigen::VectorXf sample_attribute(std::mt19937_64& rng, const std::vector<train::AttributeGaussian>& stats,
                                 const gan::DomainVector& domain) {
  domain.validate();
  require(static_cast<int>(stats.size()) == domain.size(), ErrorKind::Domain,
          "attribute statistics cover " + std::to_string(stats.size()) + " domains, domain vector has " +
              std::to_string(domain.size()));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(gan::kAttributeDim);
  Eigen::VectorXd variance = Eigen::VectorXd::Zero(gan::kAttributeDim);
  for (int d = 0; d < domain.size(); ++d) {
    require(stats[d].mean.size() == gan::kAttributeDim && stats[d].variance.size() == gan::kAttributeDim,
            ErrorKind::Shape, "attribute statistics must have length 8");
    mean += domain.weights[d] * stats[d].mean;
    variance += domain.weights[d] * stats[d].variance;
  }
  const Eigen::VectorXf noise = sample_attribute(rng);
  return (mean.array() + variance.array().max(0.0).sqrt() * noise.cast<double>().array()).cast<float>().matrix();
}

gan::DomainVector interpolate_domains(const gan::DomainVector& a, const gan::DomainVector& b, double t) {
  require(t >= 0.0 && t <= 1.0, ErrorKind::Range, "interpolation weight t = " + std::to_string(t) + " is outside [0, 1]");
  a.validate();
  b.validate();
  require(a.size() == b.size(), ErrorKind::Domain, "domain vectors differ in length");
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  const auto tf = static_cast<float>(t);
  gan::DomainVector out{((1.0f - tf) * a.weights.array() + tf * b.weights.array()).matrix()};
  out.weights /= out.weights.sum();
  return out;
}

std::vector<train::AttributeGaussian> fit_attribute_stats(gan::FloatNetworks& nets, const Dataset& data,
                                                          std::size_t max_per_domain) {
  const int domains = nets.config().domains;
  require(data.domain_count() == domains, ErrorKind::Domain, "dataset and model disagree on the domain count");
  const auto by_domain = data.indices_by_domain();
  std::vector<train::AttributeGaussian> out;
  for (int d = 0; d < domains; ++d) {
    const auto& idx = by_domain[d];
    require(!idx.empty(), ErrorKind::Dataset, "domain " + data.domain_names[d] + " has no tiles");
    const std::size_t count = std::min(idx.size(), max_per_domain);
    Eigen::MatrixXd means(static_cast<Eigen::Index>(count), gan::kAttributeDim);
    const auto onehot = gan::DomainVector::one_hot(domains, d);
    for (std::size_t i = 0; i < count; ++i)
      means.row(static_cast<Eigen::Index>(i)) =
          gan::encode_attribute(nets, data.tiles[idx[i]], onehot).mean.cast<double>().transpose();
    const Eigen::RowVectorXd mu = means.colwise().mean();
    const Eigen::RowVectorXd var =
        count > 1 ? Eigen::RowVectorXd((means.rowwise() - mu).array().square().colwise().sum() / double(count - 1))
                  : Eigen::RowVectorXd::Zero(gan::kAttributeDim);
    out.push_back({mu.transpose(), var.transpose()});
  }
  return out;
}

Augmenter::Augmenter(train::Checkpoint& checkpoint, AugmentOptions options)
    : checkpoint_(checkpoint), options_(options) {
  require(checkpoint_.networks != nullptr, ErrorKind::InputValidation, "checkpoint holds no networks");
  if (options_.prior == AttributePrior::DomainGaussian)
    require(static_cast<int>(checkpoint_.attribute_stats.size()) == domain_count(), ErrorKind::InputValidation,
            "per-domain attribute prior requested but the checkpoint has no attribute statistics");
}

int Augmenter::domain_count() const { return checkpoint_.networks->config().domains; }
int Augmenter::image_size() const { return checkpoint_.networks->config().image_size; }

ImageTile Augmenter::translate_window(const ImageTile& window, const gan::DomainVector& domain,
                                      const Eigen::VectorXf& z) {
  auto& nets = *checkpoint_.networks;
  gan::AttributeCode code;
  code.value = z;
  return gan::generate(nets, gan::encode_content(nets, window), code, domain);
}

ImageTile Augmenter::augment(const ImageTile& image, const gan::DomainVector& domain, const Eigen::VectorXf& z) {
  validate_rgb(image.pixels);
  require(domain.size() == domain_count(), ErrorKind::Domain,
          "target domain vector has length " + std::to_string(domain.size()) + ", model was trained on " +
              std::to_string(domain_count()) + " domains");
  domain.validate();
  require(z.size() == gan::kAttributeDim, ErrorKind::Shape, "attribute code must have length 8");

  const int s = image_size();
  const int h = image.height(), w = image.width();
  ImageTile out;
  if (h == s && w == s) {
    out = translate_window(image, domain, z);
  } else {
    require(options_.size_policy == SizePolicy::CenterCropPad, ErrorKind::ResizePolicy,
            "tile is " + std::to_string(h) + "x" + std::to_string(w) + " but the model was trained on " +
                std::to_string(s) + "x" + std::to_string(s));
    const int rows = (h + s - 1) / s, cols = (w + s - 1) / s;
    const int top = (rows * s - h) / 2, left = (cols * s - w) / 2;
    out.pixels = make_rgb(h, w);
    for (int gy = 0; gy < rows; ++gy)
      for (int gx = 0; gx < cols; ++gx) {
        ImageTile window;
        window.pixels = crop(image.pixels, gy * s - top, gx * s - left, s, s, options_.pad_value);
        const ImageTile translated = translate_window(window, domain, z);
        for (int c = 0; c < 3; ++c)
          for (int y = 0; y < s; ++y) {
            const int ty = gy * s - top + y;
            if (ty < 0 || ty >= h) continue;
            for (int x = 0; x < s; ++x) {
              const int tx = gx * s - left + x;
              if (tx >= 0 && tx < w) out.pixels.at(0, c, ty, tx) = translated.pixels.at(0, c, y, x);
            }
          }
      }
  }
  Eigen::Index target = 0;
  domain.weights.maxCoeff(&target);
  out.domain_id = static_cast<int>(target);
  out.label = image.label;
  return out;
}

ImageTile Augmenter::augment(const ImageTile& image, const std::optional<gan::DomainVector>& domain,
                             const std::optional<Eigen::VectorXf>& z, std::mt19937_64& rng) {
  const gan::DomainVector d = domain ? *domain : draw_domain(rng);
  const Eigen::VectorXf code = z ? *z : draw_attribute(d, rng);
  return augment(image, d, code);
}

gan::DomainVector Augmenter::draw_domain(std::mt19937_64& rng) const {
  const int domains = domain_count();
  std::uniform_int_distribution<int> pick(0, domains - 1);
  const auto a = gan::DomainVector::one_hot(domains, pick(rng));
  if (options_.domain_mode == DomainMode::Uniform) return a;
  const auto b = gan::DomainVector::one_hot(domains, pick(rng));
  return interpolate_domains(a, b, std::uniform_real_distribution<double>(0.0, 1.0)(rng));
}

Eigen::VectorXf Augmenter::draw_attribute(const gan::DomainVector& domain, std::mt19937_64& rng) const {
  if (options_.prior == AttributePrior::DomainGaussian)
    return sample_attribute(rng, checkpoint_.attribute_stats, domain);
  return sample_attribute(rng);
}

ImageTile Augmenter::stochastic_transform(const ImageTile& image, double p, std::mt19937_64& rng, bool* applied) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::Range, "augmentation probability must lie in [0, 1]");
  const bool hit = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  if (applied) *applied = hit;
  if (!hit) return image;
  return augment(image, std::nullopt, std::nullopt, rng);
}

}  // namespace histaug::augment
