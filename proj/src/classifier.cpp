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

#include "histaug/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "histaug/metrics.hpp"
#include "histaug/seeding.hpp"
#include "histaug/textio.hpp"

namespace histaug::clf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kModelFormat = "histaug-classifier";

int label_of(const Dataset& data, int i) { return data.records[i].label == TissueClass::Tumor ? 1 : 0; }

Tensorf stack(const std::vector<const ImageTile*>& tiles, int size) {
  const int n = static_cast<int>(tiles.size());
  Tensorf batch(Shape{n, 3, size, size});
  for (int i = 0; i < n; ++i) {
    require(tiles[i]->height() == size && tiles[i]->width() == size && tiles[i]->pixels.shape.c == 3,
            ErrorKind::Shape,
            "classifier expects " + std::to_string(size) + "x" + std::to_string(size) + " RGB tiles, got " +
                to_string(tiles[i]->pixels.shape));
    batch.data.segment(i * batch.shape.sample_size(), batch.shape.sample_size()) = tiles[i]->pixels.data;
  }
  return batch;
}

std::vector<const ImageTile*> pointers(const Dataset& data, const std::vector<int>& indices) {
  std::vector<const ImageTile*> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(&data.tiles[i]);
  return out;
}

}  // namespace

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Geometric: return "geometric";
    case Strategy::Hsv: return "hsv";
    case Strategy::HistAuGan: return "histaugan";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "geometric") return Strategy::Geometric;
  if (s == "hsv") return Strategy::Hsv;
  if (s == "histaugan") return Strategy::HistAuGan;
  throw Error(ErrorKind::InputValidation, "unknown augmentation strategy '" + s + "' (geometric, hsv, histaugan)");
}

void ClassifierConfig::validate() const {
  require(architecture == "cnn6", ErrorKind::InputValidation, "unknown classifier architecture '" + architecture + "'");
  require(image_size >= 16 && channels >= 1, ErrorKind::InputValidation, "classifier image size or width too small");
  require(lr > 0 && weight_decay >= 0, ErrorKind::InputValidation, "learning rate must be positive");
  require(epochs >= 1 && batch_size >= 1, ErrorKind::InputValidation, "epochs and batch size must be positive");
  require(test_fraction > 0 && test_fraction < 1 && validation_fraction > 0 && validation_fraction < 1,
          ErrorKind::InputValidation, "split fractions must lie in (0, 1)");
  require(erasing_probability >= 0 && erasing_probability <= 1 && histaugan_probability >= 0 &&
              histaugan_probability <= 1,
          ErrorKind::InputValidation, "probabilities must lie in [0, 1]");
}

json to_json(const ClassifierConfig& c) {
  return {{"architecture", c.architecture},
          {"image_size", c.image_size},
          {"channels", c.channels},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"test_fraction", c.test_fraction},
          {"validation_fraction", c.validation_fraction},
          {"erasing_probability", c.erasing_probability},
          {"histaugan_probability", c.histaugan_probability}};
}

ClassifierConfig classifier_config_from_json(const json& j) {
  ClassifierConfig c;
  c.architecture = j.value("architecture", c.architecture);
  c.image_size = j.value("image_size", c.image_size);
  c.channels = j.value("channels", c.channels);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.erasing_probability = j.value("erasing_probability", c.erasing_probability);
  c.histaugan_probability = j.value("histaugan_probability", c.histaugan_probability);
  c.validate();
  return c;
}

void ExperimentSpec::validate() const {
  require(!train_domain.empty(), ErrorKind::InputValidation, "experiment needs a training domain");
  require(repeats >= 1, ErrorKind::InputValidation, "repeats must be at least 1");
  classifier.validate();
}

json to_json(const ExperimentSpec& s) {
  return {{"train_domain", s.train_domain},
          {"aug_strategy", to_string(s.strategy)},
          {"repeats", s.repeats},
          {"classifier", to_json(s.classifier)}};
}

ExperimentSpec experiment_spec_from_json(const json& j) {
  ExperimentSpec s;
  s.train_domain = j.at("train_domain").get<std::string>();
  s.strategy = strategy_from_string(j.at("aug_strategy").get<std::string>());
  s.repeats = j.value("repeats", 1);
  if (j.contains("classifier")) s.classifier = classifier_config_from_json(j.at("classifier"));
  s.validate();
  return s;
}

Classifier::Classifier(const ClassifierConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(derive_seed(config_.seed, {0x636e6e}));
  net_ = Cnn6<float>(config_.channels, rng);
}

Eigen::MatrixXd Classifier::logits(const std::vector<const ImageTile*>& tiles) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(tiles.size()), 2);
  constexpr std::size_t kChunk = 64;
  for (std::size_t begin = 0; begin < tiles.size(); begin += kChunk) {
    const std::vector<const ImageTile*> chunk(tiles.begin() + begin,
                                              tiles.begin() + std::min(tiles.size(), begin + kChunk));
    ad::Graph<float> g;
    g.freeze(params());
    const auto l = net_(g.constant(stack(chunk, config_.image_size))).value();
    for (std::size_t i = 0; i < chunk.size(); ++i)
      for (int k = 0; k < 2; ++k) out(static_cast<Eigen::Index>(begin + i), k) = l.data[static_cast<Eigen::Index>(i) * 2 + k];
  }
  return out;
}

std::vector<double> Classifier::scores(const std::vector<const ImageTile*>& tiles) {
  const Eigen::MatrixXd l = logits(tiles);
  std::vector<double> out(tiles.size());
  // softmax(l)_1 = 1 / (1 + exp(l0 - l1))
  for (Eigen::Index i = 0; i < l.rows(); ++i) out[i] = 1.0 / (1.0 + std::exp(l(i, 0) - l(i, 1)));
  return out;
}

double Classifier::train_step(const std::vector<ImageTile>& batch, const Eigen::VectorXd& class_weights,
                              nn::Adam<float>& adam) {
  std::vector<const ImageTile*> ptrs;
  RowMatrix<float> target = RowMatrix<float>::Zero(static_cast<Eigen::Index>(batch.size()), 2);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ptrs.push_back(&batch[i]);
    require(batch[i].label.has_value(), ErrorKind::Dataset, "training tile without a label");
    const int y = *batch[i].label == TissueClass::Tumor ? 1 : 0;
    target(static_cast<Eigen::Index>(i), y) = static_cast<float>(class_weights[y]);
  }
  ad::Graph<float> g;
  const auto loss = ad::softmax_cross_entropy(net_(g.constant(stack(ptrs, config_.image_size))), target);
  require(loss.value().all_finite(), ErrorKind::Divergence, "classifier loss is not finite");
  adam.zero_grad();
  g.backward(loss);
  adam.step();
  return loss.value().data[0];
}

void Classifier::save(const fs::path& dir) const {
  fs::create_directories(dir / "params");
  auto& self = const_cast<Classifier&>(*this);
  json entries = json::array();
  for (auto* p : self.params()) {
    const std::string file = "params/" + p->name + ".f32";
    write_blob(dir / file, p->value.ptr(), static_cast<std::size_t>(p->value.size()));
    entries.push_back({{"name", p->name}, {"shape", {p->value.shape.n, p->value.shape.c, p->value.shape.h, p->value.shape.w}},
                       {"dtype", "float32-le"}, {"file", file}});
  }
  json meta = {{"format", kModelFormat}, {"format_version", 1}, {"config", to_json(config_)}, {"params", entries}};
  write_text_file(dir / "model.json", meta.dump(2) + "\n");
}

Classifier Classifier::load(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(read_text_file(dir / "model.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, dir.string() + "/model.json: " + e.what());
  }
  require(meta.value("format", "") == kModelFormat, ErrorKind::Io, dir.string() + " is not a classifier model");
  Classifier model(classifier_config_from_json(meta.at("config")));
  auto params = model.params();
  const auto& entries = meta.at("params");
  require(entries.size() == params.size(), ErrorKind::Io, "model parameter count mismatch in " + dir.string());
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(entries[i].at("name").get<std::string>() == params[i]->name, ErrorKind::Io,
            "unexpected parameter " + entries[i].at("name").get<std::string>());
    read_blob(dir / entries[i].at("file").get<std::string>(), params[i]->value.ptr(),
              static_cast<std::size_t>(params[i]->value.size()));
  }
  return model;
}

Split stratified_split(const Dataset& data, const std::vector<int>& indices, double test_fraction,
                       double validation_fraction, std::mt19937_64& rng) {
  Split s;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<int> pool;
    for (int i : indices)
      if (label_of(data, i) == cls) pool.push_back(i);
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto n = pool.size();
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * n));
    const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * (n - n_test)));
    s.test.insert(s.test.end(), pool.begin(), pool.begin() + n_test);
    s.validation.insert(s.validation.end(), pool.begin() + n_test, pool.begin() + n_test + n_val);
    s.train.insert(s.train.end(), pool.begin() + n_test + n_val, pool.end());
  }
  for (auto* part : {&s.train, &s.validation, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

ImageTile augment_for_training(const ImageTile& tile, Strategy strategy, const ClassifierConfig& config,
                               augment::Augmenter* gan, std::mt19937_64& rng) {
  ImageTile out = classical::geometric(tile, rng);
  switch (strategy) {
    case Strategy::Geometric: break;
    case Strategy::Hsv: out = classical::hsv_augment(out, rng); break;
    case Strategy::HistAuGan:
      require(gan != nullptr, ErrorKind::InputValidation, "histaugan strategy needs a trained GAN checkpoint");
      out = gan->stochastic_transform(out, config.histaugan_probability, rng);
      out.domain_id = tile.domain_id;
      break;
  }
  return classical::random_erasing(out, rng, config.erasing_probability);
}

TrainedClassifier train_classifier(const Dataset& data, const Split& split, Strategy strategy,
                                   const ClassifierConfig& config, augment::Augmenter* gan, std::uint64_t seed) {
  require(!split.train.empty() && !split.validation.empty(), ErrorKind::Dataset, "empty training or validation split");
  ClassifierConfig cfg = config;
  cfg.seed = seed;
  TrainedClassifier best{Classifier(cfg)};
  Classifier model(cfg);
  std::vector<int> train_labels;
  for (int i : split.train) train_labels.push_back(label_of(data, i));
  const Eigen::VectorXd weights = metrics::inverse_frequency_weights(train_labels, 2);
  nn::Adam<float> adam(model.params(), {.lr = cfg.lr, .beta1 = 0.9, .beta2 = 0.999, .weight_decay = cfg.weight_decay});

  std::mt19937_64 rng(derive_seed(seed, {0x7472}));
  const auto val_tiles = pointers(data, split.validation);
  std::vector<int> val_labels;
  for (int i : split.validation) val_labels.push_back(label_of(data, i));

  std::vector<int> order = split.train;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<ImageTile> batch;
      for (std::size_t i = begin; i < std::min(order.size(), begin + cfg.batch_size); ++i)
        batch.push_back(augment_for_training(data.tiles[order[i]], strategy, cfg, gan, rng));
      model.train_step(batch, weights, adam);
    }
    const auto scores = model.scores(val_tiles);
    std::vector<int> predictions;
    for (double s : scores) predictions.push_back(s > 0.5 ? 1 : 0);
    const double f1 = metrics::f1_tumor(predictions, val_labels);
    if (best.best_epoch < 0 || f1 > best.best_validation_f1) {
      auto dst = best.model.params();
      auto src = model.params();
      for (std::size_t p = 0; p < src.size(); ++p) dst[p]->value = src[p]->value;
      best.best_epoch = epoch;
      best.best_validation_f1 = f1;
    }
  }
  return best;
}

DomainMetrics evaluate_subset(Classifier& model, const Dataset& data, const std::vector<int>& indices) {
  const auto scores = model.scores(pointers(data, indices));
  std::vector<int> labels, predictions;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    labels.push_back(label_of(data, indices[i]));
    predictions.push_back(scores[i] > 0.5 ? 1 : 0);
  }
  DomainMetrics m;
  m.pr_auc = metrics::pr_auc(scores, labels);
  m.f1 = metrics::f1_tumor(predictions, labels);
  return m;
}

Aggregate aggregate(const std::vector<RunResult>& runs) {
  require(!runs.empty(), ErrorKind::Parameter, "no runs to aggregate");
  Aggregate a;
  a.mean_over_repeats = runs.front().domains;
  for (std::size_t d = 0; d < a.mean_over_repeats.size(); ++d) {
    double pr = 0, f1 = 0;
    for (const auto& r : runs) {
      pr += r.domains.at(d).pr_auc;
      f1 += r.domains.at(d).f1;
    }
    a.mean_over_repeats[d].pr_auc = pr / runs.size();
    a.mean_over_repeats[d].f1 = f1 / runs.size();
  }
  std::vector<double> pr, f1;
  for (const auto& m : a.mean_over_repeats)
    if (!m.in_domain) {
      pr.push_back(m.pr_auc);
      f1.push_back(m.f1);
    }
  if (!pr.empty()) {
    const auto p = metrics::mean_std(pr), f = metrics::mean_std(f1);
    a.ood_pr_auc_mean = p.mean;
    a.ood_pr_auc_std = p.std;
    a.ood_f1_mean = f.mean;
    a.ood_f1_std = f.std;
  }
  return a;
}

EvalResult run_experiment(const ExperimentSpec& spec, const Dataset& data, train::Checkpoint* gan,
                          const fs::path& model_dir) {
  spec.validate();
  const int train_domain = data.domain_index(spec.train_domain);
  const auto by_domain = data.indices_by_domain();
  for (int d = 0; d < data.domain_count(); ++d)
    require(!by_domain[d].empty(), ErrorKind::Dataset, "domain " + data.domain_names[d] + " has no tiles");
  std::unique_ptr<augment::Augmenter> augmenter;
  if (spec.strategy == Strategy::HistAuGan) {
    require(gan != nullptr, ErrorKind::InputValidation, "histaugan strategy needs a trained GAN checkpoint");
    augmenter = std::make_unique<augment::Augmenter>(*gan);
    require(augmenter->image_size() == spec.classifier.image_size, ErrorKind::InputValidation,
            "GAN and classifier were configured for different tile sizes");
  }

  EvalResult result;
  result.spec = spec;
  for (int r = 0; r < spec.repeats; ++r) {
    const std::uint64_t seed = derive_seed(spec.classifier.seed, {static_cast<std::uint64_t>(train_domain),
                                                                  static_cast<std::uint64_t>(r)});
    std::mt19937_64 split_rng(derive_seed(seed, {0x73706c}));
    const Split split = stratified_split(data, by_domain[train_domain], spec.classifier.test_fraction,
                                         spec.classifier.validation_fraction, split_rng);
    auto trained = train_classifier(data, split, spec.strategy, spec.classifier, augmenter.get(), seed);
    if (!model_dir.empty()) trained.model.save(model_dir / ("repeat_" + std::to_string(r)));
    RunResult run{r, {}};
    for (int d = 0; d < data.domain_count(); ++d) {
      DomainMetrics m = evaluate_subset(trained.model, data, d == train_domain ? split.test : by_domain[d]);
      m.test_domain = data.domain_names[d];
      m.in_domain = d == train_domain;
      run.domains.push_back(m);
    }
    result.runs.push_back(std::move(run));
  }
  result.aggregate = aggregate(result.runs);
  return result;
}

std::vector<DomainMetrics> evaluate(Classifier& model, const Dataset& data) {
  std::vector<DomainMetrics> out;
  const auto by_domain = data.indices_by_domain();
  for (int d = 0; d < data.domain_count(); ++d) {
    DomainMetrics m = evaluate_subset(model, data, by_domain[d]);
    m.test_domain = data.domain_names[d];
    out.push_back(m);
  }
  return out;
}

std::string results_csv_header() { return "train_domain,aug,repeat,test_domain,pr_auc,f1\n"; }

std::string results_csv_rows(const EvalResult& result) {
  std::ostringstream os;
  for (const auto& run : result.runs)
    for (const auto& m : run.domains)
      os << result.spec.train_domain << ',' << to_string(result.spec.strategy) << ',' << run.repeat << ','
         << m.test_domain << ',' << format_double(m.pr_auc, 9) << ',' << format_double(m.f1, 9) << '\n';
  return os.str();
}

void write_results_csv(const fs::path& path, const std::vector<EvalResult>& results) {
  std::string text = results_csv_header();
  for (const auto& r : results) text += results_csv_rows(r);
  write_text_file(path, text);
}

}  // namespace histaug::clf
