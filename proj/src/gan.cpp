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

#include "histaug/gan.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <fstream>
#include <map>
#include <sstream>

namespace histaug::gan {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    fail(ErrorKind::Parameter, "config key '" + key + "' expects an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(ErrorKind::Parameter, "config key '" + key + "' expects a boolean, got '" + value + "'");
}

Tensorf tile_batch(const ImageTile& tile) { return tile.pixels; }

Tensorf vector_tensor(const Eigen::VectorXf& v) {
  return Tensorf(Shape{1, static_cast<int>(v.size()), 1, 1}, v.array());
}

void check_input(FloatNetworks& nets, const ImageTile& image) {
  validate_rgb(image.pixels);
  const int size = nets.config().image_size;
  require(image.height() == size && image.width() == size, ErrorKind::Shape,
          "input is " + std::to_string(image.height()) + "x" + std::to_string(image.width()) + ", networks expect " +
              std::to_string(size) + "x" + std::to_string(size));
}

}  // namespace

void GanConfig::validate() const {
  require(domains >= 1, ErrorKind::Parameter, "domains must be >= 1");
  require(downsamplings >= 1, ErrorKind::Parameter, "downsamplings must be >= 1");
  require(image_size >= 4 && image_size % downsample_factor() == 0, ErrorKind::Parameter,
          "image_size must be a multiple of the downsampling factor");
  require(base_channels >= 1 && content_channels >= 1 && discriminator_channels >= 1 && mlp_hidden >= 1,
          ErrorKind::Parameter, "channel counts must be positive");
  require(first_kernel >= 1 && first_kernel % 2 == 1, ErrorKind::Parameter, "first_kernel must be odd");
  require(encoder_res_blocks >= 0 && generator_res_blocks >= 0, ErrorKind::Parameter,
          "residual block counts must be >= 0");
}

std::string GanConfig::to_text() const {
  std::ostringstream os;
  os << "image_size = " << image_size << '\n'
     << "domains = " << domains << '\n'
     << "base_channels = " << base_channels << '\n'
     << "downsamplings = " << downsamplings << '\n'
     << "content_channels = " << content_channels << '\n'
     << "first_kernel = " << first_kernel << '\n'
     << "encoder_res_blocks = " << encoder_res_blocks << '\n'
     << "generator_res_blocks = " << generator_res_blocks << '\n'
     << "mlp_hidden = " << mlp_hidden << '\n'
     << "discriminator_channels = " << discriminator_channels << '\n'
     << "per_domain_attribute_heads = " << (per_domain_attribute_heads ? "true" : "false") << '\n'
     << "init_seed = " << init_seed << '\n';
  return os.str();
}

GanConfig GanConfig::parse(const std::string& text) {
  GanConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::Parameter, "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "image_size") cfg.image_size = parse_int(key, value);
    else if (key == "domains") cfg.domains = parse_int(key, value);
    else if (key == "base_channels") cfg.base_channels = parse_int(key, value);
    else if (key == "downsamplings") cfg.downsamplings = parse_int(key, value);
    else if (key == "content_channels") cfg.content_channels = parse_int(key, value);
    else if (key == "first_kernel") cfg.first_kernel = parse_int(key, value);
    else if (key == "encoder_res_blocks") cfg.encoder_res_blocks = parse_int(key, value);
    else if (key == "generator_res_blocks") cfg.generator_res_blocks = parse_int(key, value);
    else if (key == "mlp_hidden") cfg.mlp_hidden = parse_int(key, value);
    else if (key == "discriminator_channels") cfg.discriminator_channels = parse_int(key, value);
    else if (key == "per_domain_attribute_heads") cfg.per_domain_attribute_heads = parse_bool(key, value);
    else if (key == "init_seed") cfg.init_seed = static_cast<std::uint64_t>(std::stoull(value));
    else fail(ErrorKind::Parameter, "unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

GanConfig GanConfig::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot read config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void LossWeights::validate() const {
  for (double v : {cc, c, d, recon, latent, kl})
    require(std::isfinite(v) && v >= 0.0, ErrorKind::Parameter, "loss weights must be finite and >= 0");
}

bool LossBreakdown::finite() const {
  for (double v : {cc, c, d, recon, latent, kl, total})
    if (!std::isfinite(v)) return false;
  return true;
}

DomainVector DomainVector::one_hot(int domains, int index) {
  require(index >= 0 && index < domains, ErrorKind::Domain, "domain index out of range");
  DomainVector d{Eigen::VectorXf::Zero(domains)};
  d.weights[index] = 1.0f;
  return d;
}

bool DomainVector::is_one_hot() const {
  int ones = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] == 1.0f) ++ones;
    else if (weights[i] != 0.0f) return false;
  }
  return ones == 1;
}

void DomainVector::validate() const {
  require(weights.size() > 0, ErrorKind::Domain, "empty domain vector");
  require(weights.allFinite() && (weights.array() >= 0.0f).all(), ErrorKind::Domain,
          "domain weights must be finite and nonnegative");
  require(std::abs(weights.cast<double>().sum() - 1.0) <= 1e-6, ErrorKind::Domain, "domain weights must sum to 1");
}

ContentCode encode_content(FloatNetworks& nets, const ImageTile& image) {
  check_input(nets, image);
  ad::Graph<float> g;
  g.freeze(nets.all_params());
  return {nets.content_encoder()(g.constant(tile_batch(image))).value()};
}

AttributeEncoding encode_attribute(FloatNetworks& nets, const ImageTile& image, const DomainVector& domain) {
  check_input(nets, image);
  require(domain.size() == nets.config().domains, ErrorKind::Domain, "domain vector length mismatch");
  require(domain.is_one_hot(), ErrorKind::Domain, "attribute encoding requires a one-hot domain");
  ad::Graph<float> g;
  g.freeze(nets.all_params());
  auto [mu, logvar] = nets.attribute_encoder()(g.constant(tile_batch(image)), g.constant(vector_tensor(domain.weights)));
  return {Eigen::VectorXf(mu.value().data.matrix()), Eigen::VectorXf(logvar.value().data.matrix())};
}

AttributeCode reparameterize(const Eigen::VectorXf& mean, const Eigen::VectorXf& logvar, const Eigen::VectorXf& noise) {
  require(mean.size() == kAttributeDim && logvar.size() == kAttributeDim && noise.size() == kAttributeDim,
          ErrorKind::Shape, "reparameterize expects length-8 vectors");
  AttributeCode code;
  code.value = (mean.array() + (0.5f * logvar.array()).exp() * noise.array()).matrix();
  code.mean = mean;
  code.logvar = logvar;
  return code;
}

ImageTile generate(FloatNetworks& nets, const ContentCode& content, const AttributeCode& attribute,
                   const DomainVector& domain) {
  const auto& cfg = nets.config();
  require(attribute.value.size() == kAttributeDim, ErrorKind::Shape, "attribute code must have length 8");
  require(domain.size() == cfg.domains, ErrorKind::Domain, "domain vector length mismatch");
  domain.validate();
  const Shape s = content.features.shape;
  require(s.n == 1 && s.c == cfg.content_channels && s.h == cfg.content_size() && s.w == cfg.content_size(),
          ErrorKind::Shape, "content code shape " + to_string(s) + " does not match the configuration");
  require(content.features.all_finite() && attribute.value.allFinite(), ErrorKind::Numeric, "non-finite code");
  ad::Graph<float> g;
  g.freeze(nets.all_params());
  auto out = nets.generator()(g.constant(content.features), g.constant(vector_tensor(attribute.value)),
                              g.constant(vector_tensor(domain.weights)));
  ImageTile tile;
  tile.pixels = clamp01(out.value());
  tile.domain_id = static_cast<int>(std::distance(domain.weights.data(),
                                                  std::max_element(domain.weights.data(),
                                                                   domain.weights.data() + domain.weights.size())));
  return tile;
}

DomainJudgement discriminate_domain(FloatNetworks& nets, const ImageTile& image) {
  check_input(nets, image);
  ad::Graph<float> g;
  g.freeze(nets.all_params());
  auto [realness, logits] = nets.domain_discriminator()(g.constant(tile_batch(image)));
  return {realness.value(), Eigen::VectorXf(logits.value().data.matrix())};
}

Eigen::VectorXf discriminate_content(FloatNetworks& nets, const ContentCode& content) {
  const auto& cfg = nets.config();
  require(content.features.shape.c == cfg.content_channels, ErrorKind::Shape,
          "content code has " + std::to_string(content.features.shape.c) + " channels, expected " +
              std::to_string(cfg.content_channels));
  ad::Graph<float> g;
  g.freeze(nets.all_params());
  return Eigen::VectorXf(nets.content_discriminator()(g.constant(content.features)).value().data.matrix());
}

double kl_to_standard_normal(const Eigen::VectorXd& mean, const Eigen::VectorXd& logvar) {
  require(mean.size() == logvar.size(), ErrorKind::Shape, "mean/logvar length mismatch");
  require(mean.allFinite() && logvar.allFinite(), ErrorKind::Numeric, "KL inputs must be finite");
  return 0.5 * (mean.array().square() + logvar.array().exp() - 1.0 - logvar.array()).sum();
}

TranslationBatch<float> make_pair_batch(const ImageTile& a, const ImageTile& b) {
  require(a.pixels.shape == b.pixels.shape, ErrorKind::Shape,
          "paired tiles differ in size: " + to_string(a.pixels.shape) + " vs " + to_string(b.pixels.shape));
  TranslationBatch<float> batch;
  Shape s = a.pixels.shape;
  s.n = 2;
  batch.images = Tensorf(s);
  batch.images.data << a.pixels.data, b.pixels.data;
  batch.domains = {a.domain_id, b.domain_id};
  return batch;
}

}  // namespace histaug::gan
