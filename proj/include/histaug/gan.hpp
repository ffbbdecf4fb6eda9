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

// Disentangled multi-domain translation networks and their objective.
//
// Five networks: a domain-invariant content encoder, a domain-conditioned
// attribute encoder producing an 8-d Gaussian code, a generator that
// decodes (content, attribute, domain) into an image, a patch/domain
// discriminator on images and a domain classifier on content codes.

#include <Eigen/Core>

#include <array>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "histaug/autodiff.hpp"
#include "histaug/image.hpp"
#include "histaug/nn.hpp"

namespace histaug::gan {

inline constexpr int kAttributeDim = 8;

/// Architecture hyperparameters. Read from `key = value` text.
struct GanConfig {
  int image_size = 64;
  int domains = 5;
  int base_channels = 16;
  int downsamplings = 2;
  int content_channels = 64;
  int first_kernel = 7;
  int encoder_res_blocks = 1;
  int generator_res_blocks = 2;
  int mlp_hidden = 64;
  int discriminator_channels = 16;
  /// Attribute encoder with one output head per domain instead of a single
  /// domain-conditioned head.
  bool per_domain_attribute_heads = false;
  std::uint64_t init_seed = 0;

  int downsample_factor() const { return 1 << downsamplings; }
  int content_size() const { return image_size / downsample_factor(); }

  void validate() const;
  std::string to_text() const;
  static GanConfig parse(const std::string& text);
  static GanConfig load(const std::string& path);
};

struct LossWeights {
  double cc = 10.0;
  double c = 1.0;
  double d = 1.0;
  double recon = 10.0;
  double latent = 10.0;
  double kl = 0.01;

  void validate() const;
};

struct LossBreakdown {
  double cc = 0.0;
  double c = 0.0;
  double d = 0.0;
  double recon = 0.0;
  double latent = 0.0;
  double kl = 0.0;
  double total = 0.0;

  double weighted_sum(const LossWeights& w) const {
    return w.cc * cc + w.c * c + w.d * d + w.recon * recon + w.latent * latent + w.kl * kl;
  }
  bool finite() const;
};

// ---------------------------------------------------------------------------
// Inference-facing value types

struct ContentCode {
  Tensorf features;  // {1, C, h, w}
};

struct AttributeCode {
  Eigen::VectorXf value;
  std::optional<Eigen::VectorXf> mean;
  std::optional<Eigen::VectorXf> logvar;
};

struct AttributeEncoding {
  Eigen::VectorXf mean;
  Eigen::VectorXf logvar;
};

struct DomainVector {
  Eigen::VectorXf weights;

  static DomainVector one_hot(int domains, int index);
  int size() const { return static_cast<int>(weights.size()); }
  bool is_one_hot() const;
  /// Nonnegative entries summing to one within 1e-6.
  void validate() const;
};

struct DomainJudgement {
  Tensorf realness;  // patch map {1, 1, h, w}
  Eigen::VectorXf domain_logits;
};

// ---------------------------------------------------------------------------
// Building blocks

template <typename Scalar>
using Var = ad::Var<Scalar>;

template <typename Scalar>
inline constexpr Scalar kSlope = Scalar(0.2);

/// conv-IN-lrelu-conv-IN with identity skip; optional per-sample modulation.
template <typename Scalar>
struct ResBlock {
  nn::Conv2d<Scalar> conv1, conv2;

  ResBlock() = default;
  ResBlock(const std::string& name, int channels, std::mt19937_64& rng)
      : conv1(name + ".conv1", channels, channels, 3, 1, 1, rng),
        conv2(name + ".conv2", channels, channels, 3, 1, 1, rng) {}

  Var<Scalar> operator()(Var<Scalar> x) {
    auto y = ad::leaky_relu(ad::instance_norm(conv1(x)), kSlope<Scalar>);
    return x + ad::instance_norm(conv2(y));
  }

  /// `style` holds {gamma1, beta1, gamma2, beta2}, each {n, c, 1, 1}.
  Var<Scalar> operator()(Var<Scalar> x, const std::array<Var<Scalar>, 4>& style) {
    auto y = ad::leaky_relu(ad::modulate(ad::instance_norm(conv1(x)), style[0], style[1]), kSlope<Scalar>);
    return x + ad::modulate(ad::instance_norm(conv2(y)), style[2], style[3]);
  }

  void collect(nn::ParamList<Scalar>& out) {
    conv1.collect(out);
    conv2.collect(out);
  }
};

inline std::vector<int> encoder_channels(const GanConfig& cfg) {
  std::vector<int> ch{cfg.base_channels};
  for (int i = 1; i <= cfg.downsamplings; ++i)
    ch.push_back(i == cfg.downsamplings ? cfg.content_channels : cfg.base_channels << i);
  return ch;
}

template <typename Scalar>
struct ContentEncoder {
  std::vector<nn::Conv2d<Scalar>> convs;
  std::vector<ResBlock<Scalar>> blocks;

  ContentEncoder() = default;
  ContentEncoder(const GanConfig& cfg, std::mt19937_64& rng) {
    const auto ch = encoder_channels(cfg);
    convs.emplace_back("content_encoder.conv0", 3, ch[0], cfg.first_kernel, 1, cfg.first_kernel / 2, rng);
    for (int i = 1; i < static_cast<int>(ch.size()); ++i)
      convs.emplace_back("content_encoder.down" + std::to_string(i), ch[i - 1], ch[i], 4, 2, 1, rng);
    for (int i = 0; i < cfg.encoder_res_blocks; ++i)
      blocks.emplace_back("content_encoder.res" + std::to_string(i), ch.back(), rng);
  }

  Var<Scalar> operator()(Var<Scalar> x) {
    for (auto& conv : convs) x = ad::leaky_relu(ad::instance_norm(conv(x)), kSlope<Scalar>);
    for (auto& block : blocks) x = block(x);
    return x;
  }

  void collect(nn::ParamList<Scalar>& out) {
    for (auto& c : convs) c.collect(out);
    for (auto& b : blocks) b.collect(out);
  }
};

/// Mixes per-domain head outputs {n, D*k} with domain weights {n, D} -> {n, k}.
template <typename Scalar>
Var<Scalar> mix_heads(Var<Scalar> heads, Var<Scalar> domain, int k) {
  const Shape sh = heads.shape();
  const int domains = domain.shape().c;
  require(sh.c == domains * k, ErrorKind::Shape, "mix_heads: head width");
  Tensor<Scalar> out(Shape{sh.n, k, 1, 1});
  const auto& hv = heads.value().data;
  const auto& dv = domain.value().data;
  for (int n = 0; n < sh.n; ++n)
    for (int d = 0; d < domains; ++d)
      out.data.segment(n * k, k) += dv[n * domains + d] * hv.segment((n * domains + d) * k, k);
  auto& g = *heads.graph;
  return g.record(std::move(out), {heads, domain}, [heads, domain, k, domains](ad::Graph<Scalar>& g, int self) {
    const auto& gs = g.grad(self);
    const auto& hv = g.value(heads.id).data;
    const auto& dv = g.value(domain.id).data;
    const int n_total = g.value(self).shape.n;
    for (int n = 0; n < n_total; ++n)
      for (int d = 0; d < domains; ++d) {
        if (g.requires_grad(heads.id))
          g.grad(heads.id).segment((n * domains + d) * k, k) += dv[n * domains + d] * gs.segment(n * k, k);
        if (g.requires_grad(domain.id))
          g.grad(domain.id)[n * domains + d] += (gs.segment(n * k, k) * hv.segment((n * domains + d) * k, k)).sum();
      }
  });
}

template <typename Scalar>
struct AttributeEncoder {
  std::vector<nn::Conv2d<Scalar>> convs;
  nn::Linear<Scalar> head;
  bool per_domain_heads = false;
  int domains = 0;

  AttributeEncoder() = default;
  AttributeEncoder(const GanConfig& cfg, std::mt19937_64& rng)
      : per_domain_heads(cfg.per_domain_attribute_heads), domains(cfg.domains) {
    int in = 3 + cfg.domains;
    int ch = cfg.base_channels;
    for (int i = 0; i <= cfg.downsamplings; ++i) {
      convs.emplace_back("attribute_encoder.conv" + std::to_string(i), in, ch, 4, 2, 1, rng);
      in = ch;
      if (i < 1) ch *= 2;
    }
    const int outputs = 2 * kAttributeDim * (per_domain_heads ? cfg.domains : 1);
    head = nn::Linear<Scalar>("attribute_encoder.head", in, outputs, rng, 0.1);
  }

  /// Returns (mean, logvar), each {n, 8, 1, 1}. `domain` is {n, D, 1, 1}.
  std::pair<Var<Scalar>, Var<Scalar>> operator()(Var<Scalar> x, Var<Scalar> domain) {
    const Shape s = x.shape();
    auto h = ad::concat_channels(x, ad::broadcast_spatial(domain, s.h, s.w));
    for (auto& conv : convs) h = ad::leaky_relu(conv(h), kSlope<Scalar>);
    auto out = head(ad::global_avg_pool(h));
    if (per_domain_heads) out = mix_heads(out, domain, 2 * kAttributeDim);
    return {ad::slice_channels(out, 0, kAttributeDim), ad::slice_channels(out, kAttributeDim, kAttributeDim)};
  }

  void collect(nn::ParamList<Scalar>& out) {
    for (auto& c : convs) c.collect(out);
    head.collect(out);
  }
};

template <typename Scalar>
struct Generator {
  nn::Conv2d<Scalar> input;
  std::vector<ResBlock<Scalar>> blocks;
  nn::Linear<Scalar> mlp1, mlp2;
  std::vector<nn::Conv2d<Scalar>> ups;
  nn::Conv2d<Scalar> output;
  int content_channels = 0;

  Generator() = default;
  Generator(const GanConfig& cfg, std::mt19937_64& rng) : content_channels(cfg.content_channels) {
    const auto ch = encoder_channels(cfg);
    input = nn::Conv2d<Scalar>("generator.input", cfg.content_channels + cfg.domains, cfg.content_channels, 3, 1, 1, rng);
    for (int i = 0; i < cfg.generator_res_blocks; ++i)
      blocks.emplace_back("generator.res" + std::to_string(i), cfg.content_channels, rng);
    mlp1 = nn::Linear<Scalar>("generator.mlp1", kAttributeDim + cfg.domains, cfg.mlp_hidden, rng);
    mlp2 = nn::Linear<Scalar>("generator.mlp2", cfg.mlp_hidden, 4 * cfg.content_channels * cfg.generator_res_blocks,
                              rng, 0.1);
    for (int i = cfg.downsamplings; i >= 1; --i)
      ups.emplace_back("generator.up" + std::to_string(i), ch[i], ch[i - 1], 3, 1, 1, rng);
    output = nn::Conv2d<Scalar>("generator.output", ch[0], 3, 3, 1, 1, rng);
  }

  /// content {n, C, h, w}; attribute {n, 8, 1, 1}; domain {n, D, 1, 1}.
  Var<Scalar> operator()(Var<Scalar> content, Var<Scalar> attribute, Var<Scalar> domain) {
    const Shape s = content.shape();
    require(s.c == content_channels, ErrorKind::Shape,
            "generator: content has " + std::to_string(s.c) + " channels, expected " +
                std::to_string(content_channels));
    auto h = ad::leaky_relu(input(ad::concat_channels(content, ad::broadcast_spatial(domain, s.h, s.w))),
                            kSlope<Scalar>);
    if (!blocks.empty()) {
      auto style = mlp2(ad::leaky_relu(mlp1(ad::concat_channels(attribute, domain)), kSlope<Scalar>));
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        std::array<Var<Scalar>, 4> mod;
        for (int j = 0; j < 4; ++j)
          mod[j] = ad::slice_channels(style, static_cast<int>((4 * b + j) * content_channels), content_channels);
        h = blocks[b](h, mod);
      }
    }
    for (auto& up : ups) h = ad::leaky_relu(up(ad::upsample2x(h)), kSlope<Scalar>);
    // Bounded activation mapped affinely onto [0, 1].
    return Scalar(0.5) * ad::tanh(output(h)) + Scalar(0.5);
  }

  void collect(nn::ParamList<Scalar>& out) {
    input.collect(out);
    for (auto& b : blocks) b.collect(out);
    mlp1.collect(out);
    mlp2.collect(out);
    for (auto& u : ups) u.collect(out);
    output.collect(out);
  }
};

template <typename Scalar>
struct DomainDiscriminator {
  std::vector<nn::Conv2d<Scalar>> convs;
  nn::Conv2d<Scalar> realness;
  nn::Linear<Scalar> classifier;

  DomainDiscriminator() = default;
  DomainDiscriminator(const GanConfig& cfg, std::mt19937_64& rng) {
    int in = 3, ch = cfg.discriminator_channels;
    for (int i = 0; i <= cfg.downsamplings; ++i) {
      convs.emplace_back("domain_discriminator.conv" + std::to_string(i), in, ch, 4, 2, 1, rng);
      in = ch;
      ch *= 2;
    }
    realness = nn::Conv2d<Scalar>("domain_discriminator.realness", in, 1, 3, 1, 1, rng);
    classifier = nn::Linear<Scalar>("domain_discriminator.classifier", in, cfg.domains, rng);
  }

  /// (patch realness {n, 1, h, w}, domain logits {n, D, 1, 1}).
  std::pair<Var<Scalar>, Var<Scalar>> operator()(Var<Scalar> x) {
    for (auto& conv : convs) x = ad::leaky_relu(conv(x), kSlope<Scalar>);
    return {realness(x), classifier(ad::global_avg_pool(x))};
  }

  void collect(nn::ParamList<Scalar>& out) {
    for (auto& c : convs) c.collect(out);
    realness.collect(out);
    classifier.collect(out);
  }
};

template <typename Scalar>
struct ContentDiscriminator {
  nn::Conv2d<Scalar> conv1, conv2;
  nn::Linear<Scalar> classifier;
  int content_channels = 0;

  ContentDiscriminator() = default;
  ContentDiscriminator(const GanConfig& cfg, std::mt19937_64& rng)
      : conv1("content_discriminator.conv1", cfg.content_channels, cfg.discriminator_channels * 2, 3, 2, 1, rng),
        conv2("content_discriminator.conv2", cfg.discriminator_channels * 2, cfg.discriminator_channels * 2, 3, 1, 1,
              rng),
        classifier("content_discriminator.classifier", cfg.discriminator_channels * 2, cfg.domains, rng),
        content_channels(cfg.content_channels) {}

  Var<Scalar> operator()(Var<Scalar> content) {
    require(content.shape().c == content_channels, ErrorKind::Shape,
            "content discriminator: expected " + std::to_string(content_channels) + " channels, got " +
                std::to_string(content.shape().c));
    auto h = ad::leaky_relu(conv1(content), kSlope<Scalar>);
    h = ad::leaky_relu(conv2(h), kSlope<Scalar>);
    return classifier(ad::global_avg_pool(h));
  }

  void collect(nn::ParamList<Scalar>& out) {
    conv1.collect(out);
    conv2.collect(out);
    classifier.collect(out);
  }
};

// ---------------------------------------------------------------------------
// The model as a set of callables, so the objective can run against stand-ins.

template <typename Scalar>
struct TranslationModel {
  std::function<Var<Scalar>(Var<Scalar>)> encode_content;
  std::function<std::pair<Var<Scalar>, Var<Scalar>>(Var<Scalar>, Var<Scalar>)> encode_attribute;
  std::function<Var<Scalar>(Var<Scalar>, Var<Scalar>, Var<Scalar>)> generate;
  std::function<std::pair<Var<Scalar>, Var<Scalar>>(Var<Scalar>)> discriminate_domain;
  std::function<Var<Scalar>(Var<Scalar>)> discriminate_content;
};

template <typename Scalar>
class Networks {
 public:
  Networks() = default;
  explicit Networks(const GanConfig& cfg) : config_(cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.init_seed);
    content_encoder_ = ContentEncoder<Scalar>(cfg, rng);
    attribute_encoder_ = AttributeEncoder<Scalar>(cfg, rng);
    generator_ = Generator<Scalar>(cfg, rng);
    domain_discriminator_ = DomainDiscriminator<Scalar>(cfg, rng);
    content_discriminator_ = ContentDiscriminator<Scalar>(cfg, rng);
  }

  Networks(const Networks&) = delete;
  Networks& operator=(const Networks&) = delete;
  Networks(Networks&&) = default;
  Networks& operator=(Networks&&) = default;

  const GanConfig& config() const { return config_; }

  ContentEncoder<Scalar>& content_encoder() { return content_encoder_; }
  AttributeEncoder<Scalar>& attribute_encoder() { return attribute_encoder_; }
  Generator<Scalar>& generator() { return generator_; }
  DomainDiscriminator<Scalar>& domain_discriminator() { return domain_discriminator_; }
  ContentDiscriminator<Scalar>& content_discriminator() { return content_discriminator_; }

  nn::ParamList<Scalar> translation_params() {
    nn::ParamList<Scalar> out;
    content_encoder_.collect(out);
    attribute_encoder_.collect(out);
    generator_.collect(out);
    return out;
  }
  nn::ParamList<Scalar> content_discriminator_params() {
    nn::ParamList<Scalar> out;
    content_discriminator_.collect(out);
    return out;
  }
  nn::ParamList<Scalar> domain_discriminator_params() {
    nn::ParamList<Scalar> out;
    domain_discriminator_.collect(out);
    return out;
  }
  nn::ParamList<Scalar> all_params() {
    auto out = translation_params();
    content_discriminator_.collect(out);
    domain_discriminator_.collect(out);
    return out;
  }

  TranslationModel<Scalar> model() {
    TranslationModel<Scalar> m;
    m.encode_content = [this](Var<Scalar> x) { return content_encoder_(x); };
    m.encode_attribute = [this](Var<Scalar> x, Var<Scalar> d) { return attribute_encoder_(x, d); };
    m.generate = [this](Var<Scalar> c, Var<Scalar> a, Var<Scalar> d) { return generator_(c, a, d); };
    m.discriminate_domain = [this](Var<Scalar> x) { return domain_discriminator_(x); };
    m.discriminate_content = [this](Var<Scalar> c) { return content_discriminator_(c); };
    return m;
  }

 private:
  GanConfig config_;
  ContentEncoder<Scalar> content_encoder_;
  AttributeEncoder<Scalar> attribute_encoder_;
  Generator<Scalar> generator_;
  DomainDiscriminator<Scalar> domain_discriminator_;
  ContentDiscriminator<Scalar> content_discriminator_;
};

// ---------------------------------------------------------------------------
// Objective

/// A paired batch: samples [0, P) come from the "a" side and [P, 2P) from
/// the "b" side; sample i is translated towards the domain of i +/- P.
template <typename Scalar>
struct TranslationBatch {
  Tensor<Scalar> images;  // {2P, 3, H, W}
  std::vector<int> domains;

  int pairs() const { return images.shape.n / 2; }
  void validate(int domain_count) const;
};

/// Fixed noise for one evaluation of the objective.
template <typename Scalar>
struct LossNoise {
  Tensor<Scalar> reparam;  // {2P, 8, 1, 1}
  Tensor<Scalar> random_attribute;

  static LossNoise draw(int samples, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    LossNoise n{Tensor<Scalar>(Shape{samples, kAttributeDim, 1, 1}), Tensor<Scalar>(Shape{samples, kAttributeDim, 1, 1})};
    for (Eigen::Index i = 0; i < n.reparam.size(); ++i) n.reparam.data[i] = static_cast<Scalar>(normal(rng));
    for (Eigen::Index i = 0; i < n.random_attribute.size(); ++i)
      n.random_attribute.data[i] = static_cast<Scalar>(normal(rng));
    return n;
  }
};

/// Every graph node the trainer needs besides the six terms.
template <typename Scalar>
struct LossGraph {
  Var<Scalar> cc, c, d, recon, latent, kl, total;
  Var<Scalar> content;        // encoder output for the real batch
  Var<Scalar> translated;     // cross-domain and random-attribute images
  std::vector<int> translated_domains;
  Var<Scalar> real;
  std::vector<int> real_domains;
};

template <typename Scalar>
Tensor<Scalar> one_hot_domains(const std::vector<int>& domains, int count) {
  Tensor<Scalar> t(Shape{static_cast<int>(domains.size()), count, 1, 1});
  for (std::size_t i = 0; i < domains.size(); ++i) t.data[static_cast<Eigen::Index>(i) * count + domains[i]] = 1;
  return t;
}

/// z = mean + exp(logvar / 2) * noise.
template <typename Scalar>
Var<Scalar> reparameterize(Var<Scalar> mean, Var<Scalar> logvar, Var<Scalar> noise) {
  return mean + ad::exp(Scalar(0.5) * logvar) * noise;
}

/// Batch mean of 0.5 * sum(mean^2 + exp(logvar) - 1 - logvar).
template <typename Scalar>
Var<Scalar> kl_term(Var<Scalar> mean, Var<Scalar> logvar) {
  const Scalar samples = Scalar(mean.shape().n);
  auto per_entry = ad::square(mean) + ad::exp(logvar) - logvar;
  return (Scalar(0.5) / samples) * ad::sum(per_entry) + Scalar(-0.5) * Scalar(mean.shape().sample_size());
}

/// Non-adversarial half of the objective plus the tensors the discriminators see.
template <typename Scalar>
LossGraph<Scalar> translation_forward(ad::Graph<Scalar>& g, const TranslationModel<Scalar>& model,
                                      const TranslationBatch<Scalar>& batch, const LossNoise<Scalar>& noise,
                                      int domain_count) {
  const int samples = batch.images.shape.n;
  const int pairs = samples / 2;
  std::vector<int> partner(samples);
  for (int i = 0; i < samples; ++i) partner[i] = (i + pairs) % samples;
  std::vector<int> partner_domains(samples);
  for (int i = 0; i < samples; ++i) partner_domains[i] = batch.domains[partner[i]];

  LossGraph<Scalar> L;
  auto x = g.constant(batch.images);
  auto d = g.constant(one_hot_domains<Scalar>(batch.domains, domain_count));
  auto d_partner = g.constant(one_hot_domains<Scalar>(partner_domains, domain_count));

  auto content = model.encode_content(x);
  auto [mu, logvar] = model.encode_attribute(x, d);
  auto attribute = reparameterize(mu, logvar, g.constant(noise.reparam));

  // Self reconstruction.
  L.recon = ad::l1(model.generate(content, attribute, d), x);

  // Cross translation: own content, partner's attribute and domain.
  auto swapped = model.generate(content, ad::permute_batch(attribute, partner), d_partner);
  auto swapped_content = model.encode_content(swapped);
  auto swapped_attribute = model.encode_attribute(swapped, d_partner).first;
  // The partner's translation carries this sample's attribute; swap back.
  auto cycled = model.generate(swapped_content, ad::permute_batch(swapped_attribute, partner), d);
  L.cc = ad::l1(cycled, x);

  // Latent regression from a prior draw.
  auto z_random = g.constant(noise.random_attribute);
  auto random_image = model.generate(content, z_random, d_partner);
  L.latent = ad::l1(model.encode_attribute(random_image, d_partner).first, z_random);

  L.kl = kl_term(mu, logvar);

  L.content = content;
  L.translated = ad::concat_batch(swapped, random_image);
  L.translated_domains = partner_domains;
  L.translated_domains.insert(L.translated_domains.end(), partner_domains.begin(), partner_domains.end());
  L.real = x;
  L.real_domains = batch.domains;
  return L;
}

/// Adversarial terms for the encoder/generator side, then the weighted total.
template <typename Scalar>
void adversarial_terms(ad::Graph<Scalar>& g, const TranslationModel<Scalar>& model, LossGraph<Scalar>& L,
                       const LossWeights& w, int domain_count) {
  auto [realness, logits] = model.discriminate_domain(L.translated);
  L.d = ad::mse_to(realness, Scalar(1)) +
        ad::softmax_cross_entropy(logits, ad::one_hot_rows<Scalar>(L.translated_domains, domain_count));
  auto content_logits = model.discriminate_content(L.content);
  const RowMatrix<Scalar> uniform =
      RowMatrix<Scalar>::Constant(content_logits.shape().n, domain_count, Scalar(1) / Scalar(domain_count));
  L.c = ad::softmax_cross_entropy(content_logits, uniform);
  L.total = Scalar(w.cc) * L.cc + Scalar(w.c) * L.c + Scalar(w.d) * L.d + Scalar(w.recon) * L.recon +
            Scalar(w.latent) * L.latent + Scalar(w.kl) * L.kl;
}

template <typename Scalar>
LossGraph<Scalar> build_losses(ad::Graph<Scalar>& g, const TranslationModel<Scalar>& model,
                               const TranslationBatch<Scalar>& batch, const LossNoise<Scalar>& noise,
                               const LossWeights& weights, int domain_count) {
  weights.validate();
  batch.validate(domain_count);
  auto L = translation_forward(g, model, batch, noise, domain_count);
  adversarial_terms(g, model, L, weights, domain_count);
  return L;
}

template <typename Scalar>
LossBreakdown breakdown(const LossGraph<Scalar>& L) {
  LossBreakdown b;
  b.cc = static_cast<double>(L.cc.item());
  b.c = static_cast<double>(L.c.item());
  b.d = static_cast<double>(L.d.item());
  b.recon = static_cast<double>(L.recon.item());
  b.latent = static_cast<double>(L.latent.item());
  b.kl = static_cast<double>(L.kl.item());
  b.total = static_cast<double>(L.total.item());
  return b;
}

/// Evaluates the full weighted objective for one batch without updating anything.
template <typename Scalar>
LossBreakdown compute_losses(const TranslationModel<Scalar>& model, const TranslationBatch<Scalar>& batch,
                             const LossNoise<Scalar>& noise, const LossWeights& weights, int domain_count) {
  ad::Graph<Scalar> g;
  return breakdown(build_losses(g, model, batch, noise, weights, domain_count));
}

/// Content-discriminator objective: classify the (detached) content code's domain.
template <typename Scalar>
Var<Scalar> content_discriminator_loss(const TranslationModel<Scalar>& model, Var<Scalar> content,
                                       const std::vector<int>& domains, int domain_count) {
  return ad::softmax_cross_entropy(model.discriminate_content(ad::detach(content)),
                                   ad::one_hot_rows<Scalar>(domains, domain_count));
}

/// Domain-discriminator objective: least-squares real/fake plus domain classification of reals.
template <typename Scalar>
Var<Scalar> domain_discriminator_loss(const TranslationModel<Scalar>& model, Var<Scalar> real,
                                      const std::vector<int>& real_domains, Var<Scalar> fake, int domain_count) {
  auto [real_score, real_logits] = model.discriminate_domain(ad::detach(real));
  auto fake_score = model.discriminate_domain(ad::detach(fake)).first;
  return ad::mse_to(real_score, Scalar(1)) + ad::mse_to(fake_score, Scalar(0)) +
         ad::softmax_cross_entropy(real_logits, ad::one_hot_rows<Scalar>(real_domains, domain_count));
}

template <typename Scalar>
void TranslationBatch<Scalar>::validate(int domain_count) const {
  require(images.shape.n >= 2 && images.shape.n % 2 == 0, ErrorKind::BatchComposition,
          "translation batch needs an even number of samples");
  require(static_cast<int>(domains.size()) == images.shape.n, ErrorKind::BatchComposition,
          "one domain label per sample required");
  require(images.shape.c == 3 && images.shape.h == images.shape.w, ErrorKind::Shape,
          "batch images must be square RGB, got " + to_string(images.shape));
  const int pairs = images.shape.n / 2;
  for (int i = 0; i < pairs; ++i) {
    require(domains[i] >= 0 && domains[i] < domain_count && domains[i + pairs] >= 0 &&
                domains[i + pairs] < domain_count,
            ErrorKind::Domain, "batch domain id out of range");
    require(domains[i] != domains[i + pairs], ErrorKind::BatchComposition,
            "paired samples must come from different domains");
  }
}

// ---------------------------------------------------------------------------
// Single-tile inference API (float networks)

using FloatNetworks = Networks<float>;

ContentCode encode_content(FloatNetworks& nets, const ImageTile& image);
AttributeEncoding encode_attribute(FloatNetworks& nets, const ImageTile& image, const DomainVector& domain);
AttributeCode reparameterize(const Eigen::VectorXf& mean, const Eigen::VectorXf& logvar, const Eigen::VectorXf& noise);
ImageTile generate(FloatNetworks& nets, const ContentCode& content, const AttributeCode& attribute,
                   const DomainVector& domain);
DomainJudgement discriminate_domain(FloatNetworks& nets, const ImageTile& image);
Eigen::VectorXf discriminate_content(FloatNetworks& nets, const ContentCode& content);
double kl_to_standard_normal(const Eigen::VectorXd& mean, const Eigen::VectorXd& logvar);

/// Builds a paired batch from two tiles.
TranslationBatch<float> make_pair_batch(const ImageTile& a, const ImageTile& b);

}  // namespace histaug::gan
