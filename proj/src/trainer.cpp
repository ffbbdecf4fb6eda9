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

#include "histaug/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "histaug/seeding.hpp"
#include "histaug/textio.hpp"

namespace histaug::train {

using nlohmann::json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

namespace {

constexpr const char* kFormat = "histaug-checkpoint";
constexpr int kFormatVersion = 1;

json shape_json(const Shape& s) { return json::array({s.n, s.c, s.h, s.w}); }

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  weights.validate();
  require(model.domains >= 2, ErrorKind::Parameter, "training needs at least two domains");
  require(iterations >= 1, ErrorKind::Parameter, "iterations must be >= 1");
  require(batch_size >= 2 && batch_size % 2 == 0, ErrorKind::Parameter, "batch_size must be an even count >= 2");
  require(checkpoint_every >= 1, ErrorKind::Parameter, "checkpoint_every must be >= 1");
  require(lr_discriminator > 0 && lr_translation > 0, ErrorKind::Parameter, "learning rates must be positive");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, ErrorKind::Parameter, "betas must lie in [0, 1)");
}

json to_json(const gan::GanConfig& c) {
  return {{"image_size", c.image_size},
          {"domains", c.domains},
          {"base_channels", c.base_channels},
          {"downsamplings", c.downsamplings},
          {"content_channels", c.content_channels},
          {"first_kernel", c.first_kernel},
          {"encoder_res_blocks", c.encoder_res_blocks},
          {"generator_res_blocks", c.generator_res_blocks},
          {"mlp_hidden", c.mlp_hidden},
          {"discriminator_channels", c.discriminator_channels},
          {"per_domain_attribute_heads", c.per_domain_attribute_heads},
          {"init_seed", c.init_seed}};
}

gan::GanConfig gan_config_from_json(const json& j) {
  gan::GanConfig c;
  c.image_size = j.at("image_size").get<int>();
  c.domains = j.at("domains").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.downsamplings = j.at("downsamplings").get<int>();
  c.content_channels = j.at("content_channels").get<int>();
  c.first_kernel = j.at("first_kernel").get<int>();
  c.encoder_res_blocks = j.at("encoder_res_blocks").get<int>();
  c.generator_res_blocks = j.at("generator_res_blocks").get<int>();
  c.mlp_hidden = j.at("mlp_hidden").get<int>();
  c.discriminator_channels = j.at("discriminator_channels").get<int>();
  c.per_domain_attribute_heads = j.at("per_domain_attribute_heads").get<bool>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  c.validate();
  return c;
}

json to_json(const gan::LossWeights& w) {
  return {{"cc", w.cc}, {"c", w.c}, {"d", w.d}, {"recon", w.recon}, {"latent", w.latent}, {"kl", w.kl}};
}

gan::LossWeights loss_weights_from_json(const json& j) {
  gan::LossWeights w;
  w.cc = j.at("cc").get<double>();
  w.c = j.at("c").get<double>();
  w.d = j.at("d").get<double>();
  w.recon = j.at("recon").get<double>();
  w.latent = j.at("latent").get<double>();
  w.kl = j.at("kl").get<double>();
  return w;
}

json to_json(const TrainConfig& c) {
  return {{"model", to_json(c.model)},
          {"weights", to_json(c.weights)},
          {"iterations", c.iterations},
          {"batch_size", c.batch_size},
          {"lr_discriminator", c.lr_discriminator},
          {"lr_translation", c.lr_translation},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.model = gan_config_from_json(j.at("model"));
  c.weights = loss_weights_from_json(j.at("weights"));
  c.iterations = j.at("iterations").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr_discriminator = j.at("lr_discriminator").get<double>();
  c.lr_translation = j.at("lr_translation").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.checkpoint_every = j.at("checkpoint_every").get<int>();
  return c;
}

Optimizers::Optimizers(gan::Networks<float>& nets, const TrainConfig& cfg)
    : content_discriminator(nets.content_discriminator_params(),
                            {.lr = cfg.lr_discriminator, .beta1 = cfg.beta1, .beta2 = cfg.beta2}),
      domain_discriminator(nets.domain_discriminator_params(),
                           {.lr = cfg.lr_discriminator, .beta1 = cfg.beta1, .beta2 = cfg.beta2}),
      translation(nets.translation_params(), {.lr = cfg.lr_translation, .beta1 = cfg.beta1, .beta2 = cfg.beta2}) {}

Checkpoint Checkpoint::fresh(const TrainConfig& config, std::vector<std::string> domain_names) {
  config.validate();
  require(static_cast<int>(domain_names.size()) == config.domain_count(), ErrorKind::Dataset,
          "expected " + std::to_string(config.domain_count()) + " domain names, got " +
              std::to_string(domain_names.size()));
  Checkpoint ck;
  ck.config = config;
  ck.domain_names = std::move(domain_names);
  ck.networks = std::make_unique<gan::Networks<float>>(config.model);
  ck.optimizers = std::make_unique<Optimizers>(*ck.networks, config);
  ck.rng.seed(derive_seed(config.seed, {0x7472u}));
  return ck;
}

void Checkpoint::save(const fs::path& dir) const {
  require(networks && optimizers, ErrorKind::Io, "checkpoint has no networks to save");
  // Build next to the target and swap in, so a crash never leaves a half-written checkpoint.
  fs::path staging = dir;
  staging += ".partial";
  fs::remove_all(staging);
  fs::create_directories(staging / "params");
  fs::create_directories(staging / "adam");

  json manifest = json::array();
  const std::vector<std::pair<std::string, const nn::Adam<float>*>> groups{
      {"content_discriminator", &optimizers->content_discriminator},
      {"domain_discriminator", &optimizers->domain_discriminator},
      {"translation", &optimizers->translation}};
  json steps = json::object();
  for (const auto& [group, opt] : groups) {
    steps[group] = opt->steps();
    for (std::size_t i = 0; i < opt->params().size(); ++i) {
      const auto* p = opt->params()[i];
      const std::string param_file = "params/" + p->name + ".f32";
      write_blob(staging / param_file, p->value.ptr(), static_cast<std::size_t>(p->value.size()));
      const std::string m_file = "adam/" + p->name + ".m.f32", v_file = "adam/" + p->name + ".v.f32";
      write_blob(staging / m_file, opt->first_moments()[i].data(), static_cast<std::size_t>(p->value.size()));
      write_blob(staging / v_file, opt->second_moments()[i].data(), static_cast<std::size_t>(p->value.size()));
      manifest.push_back({{"name", p->name},
                          {"group", group},
                          {"shape", shape_json(p->value.shape)},
                          {"dtype", "float32-le"},
                          {"file", param_file},
                          {"adam_m", m_file},
                          {"adam_v", v_file}});
    }
  }

  json stats = json::array();
  for (const auto& s : attribute_stats)
    stats.push_back({{"mean", to_vec(s.mean)}, {"variance", to_vec(s.variance)}});

  const json meta{{"format", kFormat},
                  {"format_version", kFormatVersion},
                  {"iteration", iteration},
                  {"domain_names", domain_names},
                  {"config", to_json(config)},
                  {"optimizer_steps", steps},
                  {"rng_state", rng_text(rng)},
                  {"attribute_stats", stats}};
  write_text_file(staging / "metadata.json", meta.dump(2) + "\n");
  write_text_file(staging / "manifest.json", manifest.dump(2) + "\n");

  fs::remove_all(dir);
  fs::rename(staging, dir);
}

Checkpoint Checkpoint::load(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorKind::Io, "checkpoint directory " + dir.string() + " does not exist");
  json meta, manifest;
  try {
    meta = json::parse(read_text_file(dir / "metadata.json"));
    manifest = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, "malformed checkpoint in " + dir.string() + ": " + e.what());
  }
  require(meta.value("format", "") == kFormat, ErrorKind::Io, dir.string() + " is not a checkpoint");

  Checkpoint ck = fresh(train_config_from_json(meta.at("config")),
                        meta.at("domain_names").get<std::vector<std::string>>());
  ck.iteration = meta.at("iteration").get<std::int64_t>();
  std::istringstream rs(meta.at("rng_state").get<std::string>());
  rs >> ck.rng;
  require(!rs.fail(), ErrorKind::Io, "corrupt rng state in " + dir.string());
  for (const auto& s : meta.at("attribute_stats"))
    ck.attribute_stats.push_back(
        {from_vec(s.at("mean").get<std::vector<double>>()), from_vec(s.at("variance").get<std::vector<double>>())});

  std::map<std::string, json> entries;
  for (const auto& e : manifest) entries[e.at("name").get<std::string>()] = e;
  const auto& steps = meta.at("optimizer_steps");
  for (auto* opt : {&ck.optimizers->content_discriminator, &ck.optimizers->domain_discriminator,
                    &ck.optimizers->translation}) {
    for (std::size_t i = 0; i < opt->params().size(); ++i) {
      auto* p = opt->params()[i];
      const auto it = entries.find(p->name);
      require(it != entries.end(), ErrorKind::Io, "checkpoint lacks parameter " + p->name);
      const auto& e = it->second;
      require(e.at("shape") == shape_json(p->value.shape), ErrorKind::Shape,
              "parameter " + p->name + " has shape " + e.at("shape").dump() + ", model expects " +
                  to_string(p->value.shape));
      const auto count = static_cast<std::size_t>(p->value.size());
      read_blob(dir / e.at("file").get<std::string>(), p->value.ptr(), count);
      read_blob(dir / e.at("adam_m").get<std::string>(), opt->first_moments()[i].data(), count);
      read_blob(dir / e.at("adam_v").get<std::string>(), opt->second_moments()[i].data(), count);
    }
  }
  ck.optimizers->content_discriminator.set_steps(steps.at("content_discriminator").get<std::int64_t>());
  ck.optimizers->domain_discriminator.set_steps(steps.at("domain_discriminator").get<std::int64_t>());
  ck.optimizers->translation.set_steps(steps.at("translation").get<std::int64_t>());
  return ck;
}

gan::LossBreakdown training_step(const gan::TranslationBatch<float>& batch, gan::Networks<float>& nets,
                                 Optimizers& optimizers, const TrainConfig& config, std::mt19937_64& rng,
                                 const std::function<void(StepPhase)>& probe) {
  const int domains = config.domain_count();
  batch.validate(domains);
  require(batch.images.shape.h == config.image_size(), ErrorKind::Shape,
          "batch tiles are " + std::to_string(batch.images.shape.h) + " px, model expects " +
              std::to_string(config.image_size()));
  const auto model = nets.model();
  const auto noise = gan::LossNoise<float>::draw(batch.images.shape.n, rng);

  ad::Graph<float> g;
  auto L = gan::translation_forward(g, model, batch, noise, domains);

  optimizers.content_discriminator.zero_grad();
  g.backward(gan::content_discriminator_loss(model, L.content, L.real_domains, domains));
  optimizers.content_discriminator.step();
  if (probe) probe(StepPhase::ContentDiscriminator);

  optimizers.domain_discriminator.zero_grad();
  g.backward(gan::domain_discriminator_loss(model, L.real, L.real_domains, L.translated, domains));
  optimizers.domain_discriminator.step();
  if (probe) probe(StepPhase::DomainDiscriminator);

  // Adversarial terms see the freshly updated discriminators as constants.
  g.freeze(nets.content_discriminator_params());
  g.freeze(nets.domain_discriminator_params());
  gan::adversarial_terms(g, model, L, config.weights, domains);
  optimizers.translation.zero_grad();
  g.backward(L.total);
  optimizers.translation.step();
  if (probe) probe(StepPhase::Translation);
  return gan::breakdown(L);
}

gan::TranslationBatch<float> sample_batch(const Dataset& data, const std::vector<std::vector<int>>& by_domain,
                                          int batch_size, std::mt19937_64& rng) {
  require(batch_size >= 2 && batch_size % 2 == 0, ErrorKind::BatchComposition, "batch size must be even and >= 2");
  std::vector<std::pair<int, int>> domain_pairs;
  for (int a = 0; a < static_cast<int>(by_domain.size()); ++a)
    for (int b = a + 1; b < static_cast<int>(by_domain.size()); ++b)
      if (!by_domain[a].empty() && !by_domain[b].empty()) domain_pairs.emplace_back(a, b);
  require(!domain_pairs.empty(), ErrorKind::BatchComposition, "need tiles from at least two domains");

  const int pairs = batch_size / 2;
  const auto& first = data.tiles.front().pixels.shape;
  gan::TranslationBatch<float> batch;
  batch.images = Tensorf(Shape{batch_size, 3, first.h, first.w});
  batch.domains.assign(batch_size, 0);
  std::uniform_int_distribution<std::size_t> pick_pair(0, domain_pairs.size() - 1);
  std::bernoulli_distribution flip(0.5);
  const auto place = [&](int slot, int domain) {
    const auto& pool = by_domain[domain];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const auto& px = data.tiles[pool[pick(rng)]].pixels;
    require(px.shape == Shape{1, 3, first.h, first.w}, ErrorKind::Shape, "all training tiles must share one size");
    batch.images.data.segment(static_cast<Eigen::Index>(slot) * px.size(), px.size()) = px.data;
    batch.domains[slot] = domain;
  };
  for (int i = 0; i < pairs; ++i) {
    auto [a, b] = domain_pairs[pick_pair(rng)];
    if (flip(rng)) std::swap(a, b);
    place(i, a);
    place(i + pairs, b);
  }
  return batch;
}

void check_dataset(const Dataset& data, const TrainConfig& config) {
  require(static_cast<int>(data.domain_names.size()) == config.domain_count(), ErrorKind::Dataset,
          "dataset has " + std::to_string(data.domain_names.size()) + " domains, model expects " +
              std::to_string(config.domain_count()));
  const auto by_domain = data.indices_by_domain();
  for (std::size_t d = 0; d < data.domain_names.size(); ++d)
    require(d < by_domain.size() && !by_domain[d].empty(), ErrorKind::Dataset,
            "domain '" + data.domain_names[d] + "' has no tiles");
  for (const auto& t : data.tiles)
    require(t.pixels.shape.h == config.image_size() && t.pixels.shape.w == config.image_size(), ErrorKind::Shape,
            "tile is " + std::to_string(t.pixels.shape.h) + "x" + std::to_string(t.pixels.shape.w) +
                ", training expects " + std::to_string(config.image_size()) + " px");
}

std::string log_header() { return "iter,cc,c,d,recon,latent,kl,total"; }

std::string log_row(std::int64_t iteration, const gan::LossBreakdown& b) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", static_cast<long long>(iteration), b.cc,
                b.c, b.d, b.recon, b.latent, b.kl, b.total);
  return buf;
}

Checkpoint train(const Dataset& data, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  check_dataset(data, config);
  require(!options.out_dir.empty(), ErrorKind::Usage, "training needs an output directory");
  fs::create_directories(options.out_dir / "checkpoints");

  Checkpoint ck;
  fs::path last_good;
  if (options.resume_from.empty()) {
    ck = Checkpoint::fresh(config, data.domain_names);
  } else {
    ck = Checkpoint::load(options.resume_from);
    require(ck.config.model.to_text() == config.model.to_text(), ErrorKind::Parameter,
            "resume checkpoint was trained with a different model configuration");
    require(ck.domain_names == data.domain_names, ErrorKind::Dataset,
            "resume checkpoint was trained on different domains");
    // Only the schedule may change on resume.
    ck.config.iterations = config.iterations;
    ck.config.checkpoint_every = config.checkpoint_every;
    last_good = options.resume_from;
  }

  const fs::path log_path = options.out_dir / "train_log.csv";
  std::vector<std::string> kept{log_header()};
  if (ck.iteration > 0 && fs::exists(log_path)) {
    std::istringstream prev(read_text_file(log_path));
    std::string line;
    std::getline(prev, line);
    while (std::getline(prev, line))
      if (!line.empty() && std::stoll(line.substr(0, line.find(','))) <= ck.iteration) kept.push_back(line);
  }
  std::ofstream log(log_path, std::ios::trunc);
  require(log.good(), ErrorKind::Io, "cannot write " + log_path.string());
  for (const auto& line : kept) log << line << '\n';
  log.flush();

  const auto by_domain = data.indices_by_domain();
  while (ck.iteration < ck.config.iterations) {
    const std::int64_t it = ck.iteration + 1;
    const auto batch = sample_batch(data, by_domain, ck.config.batch_size, ck.rng);
    const auto losses = training_step(batch, *ck.networks, *ck.optimizers, ck.config, ck.rng);
    if (!losses.finite())
      fail(ErrorKind::Divergence, "non-finite loss at iteration " + std::to_string(it) + "; last good checkpoint: " +
                                      (last_good.empty() ? std::string("none") : last_good.string()));
    ck.iteration = it;
    log << log_row(it, losses) << '\n';
    log.flush();
    if (options.on_step) options.on_step(it, losses);
    if (it % ck.config.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "iter_%06lld", static_cast<long long>(it));
      last_good = options.out_dir / "checkpoints" / name;
      ck.save(last_good);
    }
  }
  ck.save(options.out_dir / "checkpoint");
  return ck;
}

double reconstruction_l1(gan::Networks<float>& nets, const Dataset& data, const std::vector<int>& indices) {
  require(!indices.empty(), ErrorKind::Dataset, "no tiles to score");
  const auto model = nets.model();
  const int domains = nets.config().domains;
  double total = 0;
  constexpr std::size_t kChunk = 16;
  for (std::size_t start = 0; start < indices.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, indices.size() - start);
    const auto& s = data.tiles[indices[start]].pixels.shape;
    Tensorf x(Shape{static_cast<int>(count), 3, s.h, s.w});
    std::vector<int> dom(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& tile = data.tiles[indices[start + i]];
      x.data.segment(static_cast<Eigen::Index>(i) * tile.pixels.size(), tile.pixels.size()) = tile.pixels.data;
      dom[i] = tile.domain_id;
    }
    ad::Graph<float> g;
    auto xv = g.constant(x);
    auto dv = g.constant(gan::one_hot_domains<float>(dom, domains));
    auto recon = model.generate(model.encode_content(xv), model.encode_attribute(xv, dv).first, dv);
    total += static_cast<double>(ad::l1(recon, xv).item()) * static_cast<double>(count);
  }
  return total / static_cast<double>(indices.size());
}

}  // namespace histaug::train
