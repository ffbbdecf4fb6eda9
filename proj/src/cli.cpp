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

#include "histaug/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "histaug/augmenter.hpp"
#include "histaug/batch_metrics.hpp"
#include "histaug/classical_aug.hpp"
#include "histaug/classifier.hpp"
#include "histaug/dataset.hpp"
#include "histaug/error.hpp"
#include "histaug/plot.hpp"
#include "histaug/png_io.hpp"
#include "histaug/seeding.hpp"
#include "histaug/synthdata.hpp"
#include "histaug/textio.hpp"
#include "histaug/tiling.hpp"
#include "histaug/trainer.hpp"

namespace histaug::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class Type { Int, UInt, Real, Bool, Str, StrList };

struct Field {
  std::string key;
  Type type;
  json fallback;  // null: no default
  std::string help;
  bool required = false;
};

struct Command {
  std::string name;
  std::string description;
  std::vector<Field> fields;
  std::function<void(const json&, std::ostream&)> action;
};

Field req(std::string key, Type type, std::string help) { return {std::move(key), type, nullptr, std::move(help), true}; }
Field opt(std::string key, Type type, json fallback, std::string help) {
  return {std::move(key), type, std::move(fallback), std::move(help), false};
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

std::string str(const json& cfg, const char* key) { return cfg.at(key).get<std::string>(); }

std::mt19937_64 seeded(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return std::mt19937_64(derive_seed(seed, keys));
}

// ---------------------------------------------------------------- synth-data

void cmd_synth(const json& cfg, std::ostream& out) {
  synth::SynthConfig sc;
  sc.domains = cfg.at("domains").get<int>();
  sc.tiles_per_domain = cfg.at("n").get<int>();
  sc.size = cfg.at("size").get<int>();
  sc.seed = cfg.at("seed").get<std::uint64_t>();
  sc.tumor_prevalence = cfg.at("prevalence").get<double>();
  sc.shared_structures = cfg.at("shared_structures").get<bool>();
  const auto data = synth::generate(sc);
  synth::save(str(cfg, "out"), data);
  out << "wrote " << data.dataset.size() << " tiles over " << sc.domains << " domains to " << str(cfg, "out") << '\n';
}

// ---------------------------------------------------------------------- tile

void cmd_tile(const json& cfg, std::ostream& out) {
  const fs::path image_path = str(cfg, "image");
  const RgbImage image = read_png(image_path);
  Mask annotation;
  if (const auto mask_path = str(cfg, "mask"); !mask_path.empty()) {
    annotation = read_mask_png(mask_path);
  } else {
    annotation = Mask::Zero(image.shape.h, image.shape.w);
  }
  tiling::TileOptions options;
  options.tile_size = cfg.at("size").get<int>();
  options.min_tissue = cfg.at("min_tissue").get<double>();
  options.tissue.white_level = cfg.at("white_level").get<double>();
  options.source_id = str(cfg, "source").empty() ? image_path.stem().string() : str(cfg, "source");
  options.domain_id = cfg.at("domain_id").get<int>();

  const fs::path dir = str(cfg, "out");
  const auto tiles = tiling::tile_grid(image, annotation, options);
  fs::create_directories(dir / "tiles");
  std::vector<TileRecord> records;
  for (const auto& t : tiles) {
    write_png(dir / t.record.file, t.image.pixels);
    records.push_back(t.record);
  }
  write_manifest(dir / "manifest.csv", records);
  out << "kept " << tiles.size() << " tiles from " << image_path.string() << '\n';
}

// ----------------------------------------------------------------- train-gan

void cmd_train_gan(const json& cfg, std::ostream& out) {
  const Dataset data = load_dataset(str(cfg, "data"));
  require(data.size() > 0, ErrorKind::Dataset, "no tiles in " + str(cfg, "data"));

  train::TrainConfig tc;
  auto& m = tc.model;
  m.domains = data.domain_count();
  m.image_size = cfg.at("image_size").get<int>() > 0 ? cfg.at("image_size").get<int>() : data.tiles.front().height();
  m.base_channels = cfg.at("base_channels").get<int>();
  m.downsamplings = cfg.at("downsamplings").get<int>();
  m.content_channels = cfg.at("content_channels").get<int>();
  m.encoder_res_blocks = cfg.at("encoder_res_blocks").get<int>();
  m.generator_res_blocks = cfg.at("generator_res_blocks").get<int>();
  m.mlp_hidden = cfg.at("mlp_hidden").get<int>();
  m.discriminator_channels = cfg.at("discriminator_channels").get<int>();
  m.per_domain_attribute_heads = cfg.at("per_domain_attribute_heads").get<bool>();
  m.init_seed = cfg.at("seed").get<std::uint64_t>();
  auto& w = tc.weights;
  w.cc = cfg.at("w_cc").get<double>();
  w.c = cfg.at("w_c").get<double>();
  w.d = cfg.at("w_d").get<double>();
  w.recon = cfg.at("w_recon").get<double>();
  w.latent = cfg.at("w_latent").get<double>();
  w.kl = cfg.at("w_kl").get<double>();
  tc.iterations = cfg.at("iterations").get<int>();
  tc.batch_size = cfg.at("batch_size").get<int>();
  tc.lr_discriminator = cfg.at("lr_discriminator").get<double>();
  tc.lr_translation = cfg.at("lr_translation").get<double>();
  tc.beta1 = cfg.at("beta1").get<double>();
  tc.beta2 = cfg.at("beta2").get<double>();
  tc.seed = cfg.at("seed").get<std::uint64_t>();
  tc.checkpoint_every = cfg.at("checkpoint_every").get<int>();

  train::TrainOptions options;
  options.out_dir = str(cfg, "out");
  options.resume_from = str(cfg, "resume");
  const int every = std::max(1, cfg.at("log_every").get<int>());
  options.on_step = [&](std::int64_t it, const gan::LossBreakdown& b) {
    if (it % every == 0) out << train::log_row(it, b) << std::endl;
  };
  auto ck = train::train(data, tc, options);
  if (cfg.at("attribute_stats").get<bool>()) {
    ck.attribute_stats = augment::fit_attribute_stats(*ck.networks, data);
    ck.save(options.out_dir / "checkpoint");
  }
  out << "checkpoint at iteration " << ck.iteration << " saved to " << (options.out_dir / "checkpoint").string()
      << '\n';
}

// ------------------------------------------------------------------- augment

// Tiles from a dataset directory (manifest.csv present) or every PNG in a
// plain directory, sorted by name.
Dataset load_inputs(const fs::path& dir) {
  if (fs::exists(dir / "manifest.csv")) return load_dataset(dir);
  require(fs::is_directory(dir), ErrorKind::Io, "input directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorKind::Dataset, "no PNG tiles in " + dir.string());
  Dataset ds;
  ds.domain_names = {"input"};
  for (const auto& f : files) {
    ImageTile t;
    t.pixels = read_png(f);
    ds.tiles.push_back(std::move(t));
    TileRecord r;
    r.file = f.filename().string();
    r.source_id = f.stem().string();
    r.label = TissueClass::NonTumor;
    ds.records.push_back(r);
  }
  return ds;
}

augment::SizePolicy size_policy_from(const std::string& s) {
  if (s == "center-crop-pad") return augment::SizePolicy::CenterCropPad;
  if (s == "strict") return augment::SizePolicy::Strict;
  fail(ErrorKind::InputValidation, "unknown size policy '" + s + "' (center-crop-pad, strict)");
}

augment::AttributePrior prior_from(const std::string& s) {
  if (s == "standard-normal") return augment::AttributePrior::StandardNormal;
  if (s == "domain-gaussian") return augment::AttributePrior::DomainGaussian;
  fail(ErrorKind::InputValidation, "unknown attribute prior '" + s + "' (standard-normal, domain-gaussian)");
}

int domain_by_name(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  require(it != names.end(), ErrorKind::InputValidation, "unknown domain '" + name + "'");
  return static_cast<int>(it - names.begin());
}

void cmd_augment(const json& cfg, std::ostream& out) {
  const std::string mode = str(cfg, "mode");
  const bool gan_mode = mode == "domain" || mode == "interpolate";
  require(gan_mode || mode == "geometric" || mode == "hsv", ErrorKind::InputValidation,
          "unknown mode '" + mode + "' (domain, interpolate, geometric, hsv)");
  require(!gan_mode || !str(cfg, "checkpoint").empty(), ErrorKind::Usage,
          "missing required option --checkpoint for mode " + mode);
  const int variants = cfg.at("variants").get<int>();
  require(variants >= 1, ErrorKind::InputValidation, "--variants must be at least 1");
  const double t_flag = cfg.at("t").get<double>();
  require(t_flag <= 1.0, ErrorKind::InputValidation, "--t must lie in [0, 1] (negative: sampled)");
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

  const Dataset inputs = load_inputs(str(cfg, "in"));
  std::optional<train::Checkpoint> ck;
  std::optional<augment::Augmenter> aug;
  std::vector<std::string> names = inputs.domain_names;
  if (gan_mode) {
    ck = train::Checkpoint::load(str(cfg, "checkpoint"));
    augment::AugmentOptions options;
    options.size_policy = size_policy_from(str(cfg, "size_policy"));
    options.prior = prior_from(str(cfg, "prior"));
    aug.emplace(*ck, options);
    names = ck->domain_names;
  }
  std::optional<int> fixed_a, fixed_b;
  if (gan_mode && !str(cfg, "domain").empty()) fixed_a = domain_by_name(names, str(cfg, "domain"));
  if (gan_mode && !str(cfg, "domain_b").empty()) fixed_b = domain_by_name(names, str(cfg, "domain_b"));
  require(mode != "interpolate" || names.size() >= 2, ErrorKind::InputValidation,
          "interpolation needs at least two domains");

  const fs::path dir = str(cfg, "out");
  fs::create_directories(dir / "tiles");
  std::ostringstream manifest;
  manifest << "file,domain,t,seed\n";
  std::vector<TileRecord> records;
  const int d = static_cast<int>(names.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (int k = 0; k < variants; ++k) {
      const std::uint64_t tile_seed = derive_seed(seed, {i, static_cast<std::uint64_t>(k)});
      std::mt19937_64 rng(tile_seed);
      ImageTile result;
      std::string domain_field, t_field;
      if (mode == "domain") {
        const int target = fixed_a ? *fixed_a : std::uniform_int_distribution<int>(0, d - 1)(rng);
        const auto dv = gan::DomainVector::one_hot(d, target);
        result = aug->augment(inputs.tiles[i], dv, aug->draw_attribute(dv, rng));
        domain_field = names[target];
      } else if (mode == "interpolate") {
        const int a = fixed_a ? *fixed_a : std::uniform_int_distribution<int>(0, d - 1)(rng);
        int b = fixed_b ? *fixed_b : std::uniform_int_distribution<int>(0, d - 2)(rng);
        if (!fixed_b && b >= a) ++b;
        const double t = t_flag >= 0.0 ? t_flag : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const auto dv =
            augment::interpolate_domains(gan::DomainVector::one_hot(d, a), gan::DomainVector::one_hot(d, b), t);
        result = aug->augment(inputs.tiles[i], dv, aug->draw_attribute(dv, rng));
        domain_field = names[a] + ">" + names[b];
        t_field = format_double(t, 9);
      } else {
        result = mode == "geometric" ? classical::geometric(inputs.tiles[i], rng)
                                     : classical::hsv_augment(inputs.tiles[i], rng);
        domain_field = names[inputs.tiles[i].domain_id];
      }
      TileRecord r = inputs.records[i];
      r.source_id += "_v" + std::to_string(k);
      r.file = "tiles/" + r.source_id + ".png";
      r.domain_id = result.domain_id;
      write_png(dir / r.file, result.pixels);
      manifest << r.file << ',' << domain_field << ',' << t_field << ',' << tile_seed << '\n';
      records.push_back(std::move(r));
    }
  }
  write_text_file(dir / "manifest.csv", manifest.str());
  // Dataset-schema manifest so the output feeds batch-metrics and the classifier.
  write_manifest(dir / "tiles.csv", records);
  write_domain_names(dir / "domains.txt", names);
  out << "wrote " << records.size() << " augmented tiles to " << dir.string() << '\n';
}

// ------------------------------------------------------------- batch-metrics

void cmd_batch_metrics(const json& cfg, std::ostream& out) {
  const fs::path tiles_dir = str(cfg, "tiles");
  const fs::path manifest = str(cfg, "manifest").empty() ? tiles_dir / "manifest.csv" : fs::path(str(cfg, "manifest"));
  const Dataset data = load_dataset(tiles_dir, manifest);
  const int k = cfg.at("k").get<int>();
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const int per_domain = cfg.at("per_domain").get<int>();

  std::vector<int> chosen;
  auto by_domain = data.indices_by_domain();
  for (std::size_t dom = 0; dom < by_domain.size(); ++dom) {
    auto& idx = by_domain[dom];
    if (per_domain > 0 && static_cast<int>(idx.size()) > per_domain) {
      auto rng = seeded(seed, {0x737562, dom});
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(per_domain);
      std::sort(idx.begin(), idx.end());
    }
    chosen.insert(chosen.end(), idx.begin(), idx.end());
  }
  std::vector<ImageTile> tiles;
  std::vector<int> domains;
  for (int i : chosen) {
    tiles.push_back(data.tiles[i]);
    domains.push_back(data.tiles[i].domain_id);
  }
  const Eigen::MatrixXd stats = batch::color_stats(tiles);

  batch::EmbedParams params;
  const std::string method = str(cfg, "method");
  require(method == "umap" || method == "pca", ErrorKind::InputValidation,
          "unknown embedding method '" + method + "' (umap, pca)");
  params.method = method == "umap" ? batch::EmbeddingMethod::Umap : batch::EmbeddingMethod::Pca;
  params.umap.n_neighbors = cfg.at("n_neighbors").get<int>();
  params.umap.min_dist = cfg.at("min_dist").get<double>();
  params.umap.seed = seed;
  const auto points = batch::embed_2d(stats, domains, params);
  const Eigen::MatrixX2d xy = batch::coordinates(points);
  const double value = batch::mld(xy, domains, data.domain_count(), k);

  const fs::path dir = str(cfg, "out");
  fs::create_directories(dir);
  std::ostringstream s;
  for (const char* name : batch::kColorStatNames) s << name << ',';
  s << "domain\n";
  for (Eigen::Index r = 0; r < stats.rows(); ++r) {
    for (Eigen::Index c = 0; c < stats.cols(); ++c) s << format_double(stats(r, c), 9) << ',';
    s << data.domain_names[domains[r]] << '\n';
  }
  write_text_file(dir / "stats.csv", s.str());
  std::ostringstream e;
  e << "x,y,domain\n";
  for (const auto& p : points)
    e << format_double(p.x, 9) << ',' << format_double(p.y, 9) << ',' << data.domain_names[p.domain_id] << '\n';
  write_text_file(dir / "embedding.csv", e.str());
  write_text_file(dir / "mld.txt", format_double(value, 9) + "\n");
  plot::scatter_png(dir / "scatter.png", xy, domains, data.domain_names, "MLD " + format_double(value, 3));
  out << "mLD " << format_double(value, 6) << " over " << chosen.size() << " tiles\n";
}

// ---------------------------------------------------------- train-classifier

void cmd_train_classifier(const json& cfg, std::ostream& out) {
  const json& experiments = cfg.at("experiments");
  require(experiments.is_array() && !experiments.empty(), ErrorKind::Usage,
          "missing required option --spec (no experiments configured)");
  const Dataset data = load_dataset(str(cfg, "data"));
  const fs::path dir = str(cfg, "out");

  std::vector<clf::ExperimentSpec> specs;
  for (const auto& e : experiments) {
    auto spec = clf::experiment_spec_from_json(e);
    if (!cfg.at("seed").is_null()) spec.classifier.seed = cfg.at("seed").get<std::uint64_t>();
    if (spec.train_domain == "*") {
      for (const auto& name : data.domain_names) {
        spec.train_domain = name;
        specs.push_back(spec);
      }
    } else {
      specs.push_back(spec);
    }
  }
  std::optional<train::Checkpoint> gan;
  const bool needs_gan = std::any_of(specs.begin(), specs.end(),
                                     [](const auto& s) { return s.strategy == clf::Strategy::HistAuGan; });
  if (needs_gan) {
    require(!str(cfg, "gan").empty(), ErrorKind::Usage, "missing required option --gan for the histaugan strategy");
    gan = train::Checkpoint::load(str(cfg, "gan"));
  }
  std::vector<clf::EvalResult> results;
  for (const auto& spec : specs) {
    const fs::path model_dir = dir / "models" / (spec.train_domain + "_" + clf::to_string(spec.strategy));
    results.push_back(clf::run_experiment(spec, data, gan ? &*gan : nullptr, model_dir));
    const auto& a = results.back().aggregate;
    out << spec.train_domain << ' ' << clf::to_string(spec.strategy) << ": ood pr_auc " << format_double(a.ood_pr_auc_mean, 4)
        << " +- " << format_double(a.ood_pr_auc_std, 4) << ", ood f1 " << format_double(a.ood_f1_mean, 4) << '\n';
  }
  clf::write_results_csv(dir / "results.csv", results);
  write_report({dir / "results.csv"}, dir);
}

// ------------------------------------------------------------------ evaluate

void cmd_evaluate(const json& cfg, std::ostream& out) {
  auto model = clf::Classifier::load(str(cfg, "model"));
  const Dataset data = load_dataset(str(cfg, "data"));
  const auto metrics = clf::evaluate(model, data);
  const fs::path dir = str(cfg, "out");
  std::ostringstream s;
  s << "test_domain,pr_auc,f1\n";
  for (const auto& m : metrics) {
    s << m.test_domain << ',' << format_double(m.pr_auc, 9) << ',' << format_double(m.f1, 9) << '\n';
    out << m.test_domain << ": pr_auc " << format_double(m.pr_auc, 4) << ", f1 " << format_double(m.f1, 4) << '\n';
  }
  write_text_file(dir / "evaluation.csv", s.str());
}

// -------------------------------------------------------------------- report

void cmd_report(const json& cfg, std::ostream& out) {
  std::vector<fs::path> files;
  for (const auto& f : cfg.at("results")) files.emplace_back(f.get<std::string>());
  require(!files.empty(), ErrorKind::Usage, "missing required option --results");
  write_report(files, str(cfg, "out"));
  out << "report written to " << str(cfg, "out") << '\n';
}

std::vector<Command> commands() {
  using T = Type;
  return {
      {"synth-data",
       "Generate a synthetic multi-domain tile dataset",
       {opt("domains", T::Int, 5, "number of staining domains"), opt("n", T::Int, 200, "tiles per domain"),
        opt("size", T::Int, 64, "tile edge in pixels"), opt("seed", T::UInt, 0, "random seed"),
        opt("prevalence", T::Real, 0.3, "fraction of tumor tiles"),
        opt("shared_structures", T::Bool, false, "reuse tissue layouts across domains"),
        req("out", T::Str, "output dataset directory")},
       cmd_synth},
      {"tile",
       "Cut a slide image into tissue tiles with tumor labels",
       {req("image", T::Str, "RGB slide PNG"), opt("mask", T::Str, "", "tumor annotation PNG (nonzero = tumor)"),
        opt("size", T::Int, 512, "tile edge in pixels"), opt("min_tissue", T::Real, 0.5, "minimum tissue fraction"),
        opt("white_level", T::Real, 0.8, "background when min(R,G,B) exceeds this"),
        opt("source", T::Str, "", "source id (default: image file stem)"),
        opt("domain_id", T::Int, 0, "domain index recorded in the manifest"),
        req("out", T::Str, "output directory")},
       cmd_tile},
      {"train-gan",
       "Train the multi-domain stain translation model",
       {req("data", T::Str, "dataset directory"), req("out", T::Str, "output directory"),
        opt("iterations", T::Int, 2000, "training iterations"), opt("batch_size", T::Int, 8, "tiles per step"),
        opt("lr_discriminator", T::Real, 1e-4, "discriminator learning rate"),
        opt("lr_translation", T::Real, 1e-4, "encoder/generator learning rate"),
        opt("beta1", T::Real, 0.5, "Adam beta1"), opt("beta2", T::Real, 0.999, "Adam beta2"),
        opt("seed", T::UInt, 0, "random seed (also initializes weights)"),
        opt("checkpoint_every", T::Int, 500, "iterations between checkpoints"),
        opt("log_every", T::Int, 50, "iterations between progress lines"),
        opt("image_size", T::Int, 0, "training tile size (0: from the data)"),
        opt("base_channels", T::Int, 16, "first encoder width"), opt("downsamplings", T::Int, 2, "content downsamplings"),
        opt("content_channels", T::Int, 64, "content feature channels"),
        opt("encoder_res_blocks", T::Int, 1, "content encoder residual blocks"),
        opt("generator_res_blocks", T::Int, 2, "generator residual blocks"),
        opt("mlp_hidden", T::Int, 64, "attribute MLP width"),
        opt("discriminator_channels", T::Int, 16, "discriminator base width"),
        opt("per_domain_attribute_heads", T::Bool, false, "one attribute head per domain"),
        opt("w_cc", T::Real, 10.0, "cross-cycle loss weight"), opt("w_c", T::Real, 1.0, "content adversarial weight"),
        opt("w_d", T::Real, 1.0, "domain adversarial weight"), opt("w_recon", T::Real, 10.0, "self-reconstruction weight"),
        opt("w_latent", T::Real, 10.0, "latent regression weight"), opt("w_kl", T::Real, 0.01, "KL weight"),
        opt("resume", T::Str, "", "checkpoint directory to continue from"),
        opt("attribute_stats", T::Bool, true, "fit per-domain attribute Gaussians after training")},
       cmd_train_gan},
      {"augment",
       "Augment tiles with the trained model or a classical transform",
       {opt("checkpoint", T::Str, "", "checkpoint directory (domain and interpolate modes)"),
        req("in", T::Str, "dataset directory or directory of PNG tiles"), req("out", T::Str, "output directory"),
        opt("mode", T::Str, "domain", "domain, interpolate, geometric or hsv"),
        opt("domain", T::Str, "", "target domain name (default: drawn uniformly)"),
        opt("domain_b", T::Str, "", "second domain for interpolate (default: drawn)"),
        opt("t", T::Real, -1.0, "interpolation weight in [0,1] (negative: drawn)"), opt("seed", T::UInt, 0, "random seed"),
        opt("variants", T::Int, 1, "augmented copies per tile"),
        opt("prior", T::Str, "standard-normal", "attribute prior: standard-normal or domain-gaussian"),
        opt("size_policy", T::Str, "center-crop-pad", "center-crop-pad or strict")},
       cmd_augment},
      {"batch-metrics",
       "Color statistics, 2-d embedding and mean local diversity",
       {req("tiles", T::Str, "dataset directory"), opt("manifest", T::Str, "", "manifest CSV (default: TILES/manifest.csv)"),
        opt("k", T::Int, 10, "neighbours for local diversity"), opt("seed", T::UInt, 0, "random seed"),
        req("out", T::Str, "report directory"), opt("method", T::Str, "umap", "embedding: umap or pca"),
        opt("per_domain", T::Int, 1000, "tiles sampled per domain (0: all)"),
        opt("n_neighbors", T::Int, 15, "UMAP neighbours"), opt("min_dist", T::Real, 0.1, "UMAP minimum distance")},
       cmd_batch_metrics},
      {"train-classifier",
       "Train tumor classifiers and evaluate them across domains",
       {opt("experiments", T::Str, json::array(), "experiment list (set through --spec)"),
        req("data", T::Str, "dataset directory"), req("out", T::Str, "output directory"),
        opt("gan", T::Str, "", "checkpoint for the histaugan strategy"),
        opt("seed", T::UInt, nullptr, "override the classifier seed of every experiment")},
       cmd_train_classifier},
      {"evaluate",
       "Evaluate a saved classifier on every domain",
       {req("model", T::Str, "model directory"), req("data", T::Str, "dataset directory"),
        req("out", T::Str, "output directory")},
       cmd_evaluate},
      {"report",
       "Merge results CSVs into summary tables and bar charts",
       {req("results", T::StrList, "results CSV files"), req("out", T::Str, "output directory")},
       cmd_report},
  };
}

struct Bound {
  const Command* command = nullptr;
  CLI::App* app = nullptr;
  std::string config_file;
  std::string spec_file;
  CLI::Option* config_opt = nullptr;
  CLI::Option* spec_opt = nullptr;
  std::vector<std::function<void(json&)>> overrides;
};

template <typename V>
void bind(Bound& b, const Field& f, const std::string& help) {
  auto value = std::make_shared<V>();
  CLI::Option* o = b.app->add_option(flag_name(f.key), *value, help);
  b.overrides.push_back([o, value, key = f.key](json& cfg) {
    if (o->count()) cfg[key] = *value;
  });
}

std::string help_text(const Field& f) {
  if (f.required) return f.help + " (required)";
  if (f.fallback.is_null()) return f.help;
  return f.help + " (default: " + (f.fallback.is_string() ? f.fallback.get<std::string>() : f.fallback.dump()) + ")";
}

json load_config_file(const fs::path& path, const std::string& command) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Usage, "cannot parse config " + path.string() + ": " + e.what());
  }
  require(j.is_object(), ErrorKind::Usage, "config " + path.string() + " must hold a JSON object");
  // A run.json written by this tool carries the resolved config under "config".
  if (j.contains("config") && j.contains("command")) {
    require(j.at("command") == command, ErrorKind::Usage,
            "config " + path.string() + " was written by '" + j.at("command").get<std::string>() + "', not '" +
                command + "'");
    return j.at("config");
  }
  return j;
}

json resolve(const Bound& b) {
  const Command& c = *b.command;
  json cfg = json::object();
  for (const auto& f : c.fields) cfg[f.key] = f.fallback;
  if (b.config_opt->count()) {
    const json file = load_config_file(b.config_file, c.name);
    for (const auto& [key, value] : file.items()) {
      require(cfg.contains(key), ErrorKind::Usage, "unknown key '" + key + "' in config " + b.config_file);
      cfg[key] = value;
    }
  }
  for (const auto& apply : b.overrides) apply(cfg);
  if (b.spec_opt && b.spec_opt->count()) {
    json spec;
    try {
      spec = json::parse(read_text_file(b.spec_file));
    } catch (const json::exception& e) {
      fail(ErrorKind::Usage, "cannot parse spec " + b.spec_file + ": " + e.what());
    }
    cfg["experiments"] = spec.is_array() ? spec : json::array({spec});
  }
  for (const auto& f : c.fields)
    if (f.required && cfg.at(f.key).is_null()) fail(ErrorKind::Usage, "missing required option " + flag_name(f.key));
  return cfg;
}

void write_run_json(const Command& c, const json& cfg) {
  json run = {{"tool", "histaug"},
              {"version", kVersion},
              {"command", c.name},
              {"config", cfg},
              {"seed", cfg.contains("seed") ? cfg.at("seed") : json(nullptr)}};
  fs::path dir = cfg.at("out").get<std::string>();
  write_text_file(dir / "run.json", run.dump(2) + "\n");
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::InputValidation:
    case ErrorKind::Parameter:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto cmds = commands();
  CLI::App app("Stain augmentation toolkit for histology tiles", "histaug");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::vector<Bound> bound;
  bound.reserve(cmds.size());
  for (const auto& c : cmds) {
    // Options bind to members of `b`, so it must not move after this point.
    Bound& b = bound.emplace_back();
    b.command = &c;
    b.app = app.add_subcommand(c.name, c.description);
    b.config_opt = b.app->add_option("--config", b.config_file, "JSON config or a previous run.json");
    if (c.name == "train-classifier")
      b.spec_opt = b.app->add_option("--spec", b.spec_file, "experiment JSON (object or array)");
    for (const auto& f : c.fields) {
      if (f.key == "experiments") continue;
      const std::string help = help_text(f);
      switch (f.type) {
        case Type::Int: bind<std::int64_t>(b, f, help); break;
        case Type::UInt: bind<std::uint64_t>(b, f, help); break;
        case Type::Real: bind<double>(b, f, help); break;
        case Type::Bool: bind<bool>(b, f, help); break;
        case Type::Str: bind<std::string>(b, f, help); break;
        case Type::StrList: bind<std::vector<std::string>>(b, f, help); break;
      }
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  for (const auto& b : bound) {
    if (!b.app->parsed()) continue;
    try {
      const json cfg = resolve(b);
      write_run_json(*b.command, cfg);
      b.command->action(cfg, out);
      return 0;
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return exit_code(e.kind());
    } catch (const json::exception& e) {
      err << "error: invalid configuration: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

// ------------------------------------------------------------- report writer

void write_report(const std::vector<fs::path>& results, const fs::path& out_dir) {
  struct Row {
    std::string train, aug;
    int repeat;
    std::string test;
    double pr_auc, f1;
  };
  std::vector<Row> rows;
  std::string header = clf::results_csv_header();
  while (!header.empty() && (header.back() == '\n' || header.back() == '\r')) header.pop_back();
  for (const auto& path : results) {
    std::istringstream in(read_text_file(path));
    std::string line;
    require(std::getline(in, line) && line == header, ErrorKind::InputValidation,
            path.string() + ": expected header '" + header + "'");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      require(f.size() == 6, ErrorKind::InputValidation, path.string() + ": malformed row '" + line + "'");
      try {
        rows.push_back({f[0], f[1], std::stoi(f[2]), f[3], std::stod(f[4]), std::stod(f[5])});
      } catch (const std::exception&) {
        fail(ErrorKind::InputValidation, path.string() + ": malformed row '" + line + "'");
      }
    }
  }
  require(!rows.empty(), ErrorKind::InputValidation, "no result rows to report");
  fs::create_directories(out_dir);

  std::ostringstream merged;
  merged << header << '\n';
  for (const auto& r : rows)
    merged << r.train << ',' << r.aug << ',' << r.repeat << ',' << r.test << ',' << format_double(r.pr_auc, 9) << ','
           << format_double(r.f1, 9) << '\n';
  write_text_file(out_dir / "merged.csv", merged.str());

  // Strategies in first-seen order; groups are the test domains plus "in-domain".
  std::vector<std::string> strategies, tests;
  for (const auto& r : rows) {
    if (std::find(strategies.begin(), strategies.end(), r.aug) == strategies.end()) strategies.push_back(r.aug);
    if (std::find(tests.begin(), tests.end(), r.test) == tests.end()) tests.push_back(r.test);
  }
  const std::string in_domain = "in-domain";
  std::vector<std::string> groups = tests;
  groups.push_back(in_domain);

  // Mean over repeats and training centers for each (strategy, group).
  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::vector<double>> pr_values, f1_values;
  // Per (strategy, train center): out-of-domain values, averaged over repeats first.
  std::map<Key, std::vector<double>> ood_pr, ood_f1;
  for (const auto& r : rows) {
    const std::string& g = r.train == r.test ? in_domain : r.test;
    pr_values[{r.aug, g}].push_back(r.pr_auc);
    f1_values[{r.aug, g}].push_back(r.f1);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
  };
  auto pstd = [&](const std::vector<double>& v) {
    if (v.empty()) return std::nan("");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  // OOD summary: for each (strategy, train, test != train) average over repeats,
  // then mean and population std across those center means.
  std::map<std::pair<Key, std::string>, std::vector<std::pair<double, double>>> center;
  for (const auto& r : rows)
    if (r.train != r.test) center[{{r.aug, r.train}, r.test}].push_back({r.pr_auc, r.f1});
  for (const auto& [key, vals] : center) {
    std::vector<double> p, f;
    for (const auto& [a, b] : vals) {
      p.push_back(a);
      f.push_back(b);
    }
    ood_pr[{key.first.first, ""}].push_back(mean(p));
    ood_f1[{key.first.first, ""}].push_back(mean(f));
  }

  std::ostringstream summary;
  summary << "aug,group,pr_auc_mean,pr_auc_std,f1_mean,f1_std,n\n";
  for (const auto& s : strategies) {
    for (const auto& g : groups) {
      const auto it = pr_values.find({s, g});
      if (it == pr_values.end()) continue;
      const auto& f = f1_values.at({s, g});
      summary << s << ',' << g << ',' << format_double(mean(it->second), 9) << ',' << format_double(pstd(it->second), 9)
              << ',' << format_double(mean(f), 9) << ',' << format_double(pstd(f), 9) << ',' << it->second.size()
              << '\n';
    }
    const auto& p = ood_pr[{s, ""}];
    const auto& f = ood_f1[{s, ""}];
    if (!p.empty())
      summary << s << ",out-of-domain," << format_double(mean(p), 9) << ',' << format_double(pstd(p), 9) << ','
              << format_double(mean(f), 9) << ',' << format_double(pstd(f), 9) << ',' << p.size() << '\n';
  }
  write_text_file(out_dir / "summary.csv", summary.str());

  auto chart = [&](const std::map<Key, std::vector<double>>& values, const std::string& title, const fs::path& file) {
    std::vector<plot::BarGroup> bars;
    for (const auto& g : groups) {
      plot::BarGroup bg{g, {}, {}};
      bool any = false;
      for (const auto& s : strategies) {
        const auto it = values.find({s, g});
        bg.values.push_back(it == values.end() ? std::nan("") : mean(it->second));
        bg.errors.push_back(it == values.end() ? 0.0 : pstd(it->second));
        any = any || it != values.end();
      }
      if (any) bars.push_back(std::move(bg));
    }
    plot::bar_chart_png(out_dir / file, bars, strategies, title);
  };
  chart(pr_values, "PR-AUC", "pr_auc.png");
  chart(f1_values, "F1 TUMOR", "f1.png");
}

}  // namespace histaug::cli
