#include "doccat/classifiers/svm.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "doccat/common/binary_io.hpp"
#include "doccat/common/error.hpp"
#include "doccat/common/random.hpp"
#include "doccat/common/timestamp.hpp"
#include "doccat/eval/epoch_stats.hpp"
#include "settings_reader.hpp"

namespace doccat::classifiers {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kWeightsMagic = 0x4D565344;  // "DSVM"
constexpr std::uint32_t kWeightsVersion = 2;

double margin(const std::vector<double>& w, const text::SparseVector& x) {
  return text::dot(x, w);
}

// Weight vector w = scale * v, so the shrink step of every iteration is O(1).
struct ScaledVector {
  std::vector<double> v;
  double scale = 1.0;
  double squared_norm = 0.0;  // of v

  double dot(const text::SparseVector& x) const { return scale * text::dot(x, v); }

  void add(double a, const text::SparseVector& x) {
    // v += (a / scale) * x
    const double c = a / scale;
    for (const auto& [i, value] : x) {
      squared_norm += 2.0 * c * v[i] * value + c * c * value * value;
      v[i] += c * value;
    }
  }

  void shrink(double factor) {
    if (factor <= 0.0) {
      std::fill(v.begin(), v.end(), 0.0);
      scale = 1.0;
      squared_norm = 0.0;
      return;
    }
    scale *= factor;
    if (scale < 1e-9) {
      for (auto& x : v) x *= scale;
      squared_norm *= scale * scale;
      scale = 1.0;
    }
  }

  std::vector<double> materialize() const {
    std::vector<double> w(v);
    for (auto& x : w) x *= scale;
    return w;
  }
};

std::vector<double> pegasos(const std::vector<text::SparseVector>& x, const std::vector<int>& labels,
                            std::size_t dim, const SvmSettings& s, Rng rng,
                            const std::function<void(std::size_t epoch)>& on_epoch) {
  ScaledVector w{std::vector<double>(dim, 0.0)};
  const double radius = 1.0 / std::sqrt(s.lambda);
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t t = 0;
  for (std::size_t epoch = 0; epoch < s.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (s.lambda * static_cast<double>(t));
      const double m = labels[i] * w.dot(x[i]);
      w.shrink(1.0 - 1.0 / static_cast<double>(t));
      if (m < 1.0) w.add(eta * labels[i], x[i]);
      const double norm = w.scale * std::sqrt(std::max(0.0, w.squared_norm));
      if (norm > radius) w.shrink(radius / norm);
    }
    if (on_epoch) on_epoch(epoch);
  }
  return w.materialize();
}

}  // namespace

void SvmSettings::validate() const {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  text::make_tokenizer(tokenizer);
}

SvmSettings SvmSettings::from_json(const nlohmann::json& j) {
  detail::SettingsReader r(j);
  SvmSettings s;
  r.read("lambda", s.lambda);
  s.epochs = r.read_size("epochs", s.epochs);
  std::string mode = eval::label_mode_name(s.mode);
  r.read("mode", mode);
  s.mode = eval::parse_label_mode(mode);
  r.read("tokenizer", s.tokenizer);
  r.read("seed", s.seed);
  r.finish();
  s.validate();
  return s;
}

nlohmann::json SvmSettings::to_json() const {
  return {{"lambda", lambda},
          {"epochs", epochs},
          {"mode", eval::label_mode_name(mode)},
          {"tokenizer", tokenizer},
          {"seed", seed}};
}

nn::Tensor<float> margins_to_probabilities(const nn::Tensor<double>& margins, eval::LabelMode mode) {
  nn::Tensor<float> out(margins.shape());
  const std::size_t k = margins.dim(1);
  for (std::size_t r = 0; r < margins.dim(0); ++r) {
    const auto row = margins.row(r);
    auto o = out.row(r);
    if (mode == eval::LabelMode::multi_label) {
      for (std::size_t c = 0; c < k; ++c) o[c] = static_cast<float>(1.0 / (1.0 + std::exp(-row[c])));
      continue;
    }
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    std::vector<double> e(k);
    for (std::size_t c = 0; c < k; ++c) total += e[c] = std::exp(row[c] - peak);
    for (std::size_t c = 0; c < k; ++c) o[c] = static_cast<float>(e[c] / total);
  }
  return out;
}

SvmClassifier::SvmClassifier(text::TfIdfModel tfidf, std::vector<std::vector<double>> weights,
                             std::string tokenizer, eval::LabelMode mode)
    : tfidf_(std::move(tfidf)), weights_(std::move(weights)), tokenizer_(text::make_tokenizer(tokenizer)),
      mode_(mode) {
  if (weights_.size() < 2) throw InvalidArgument("an svm classifier needs at least two classes");
  for (const auto& w : weights_) {
    if (w.size() != tfidf_.vocabulary_size()) throw ShapeError("svm weights do not match the vocabulary");
  }
}

nn::Tensor<double> SvmClassifier::margins(std::span<const text::SparseVector> vectors) const {
  nn::Tensor<double> out(nn::Shape{vectors.size(), weights_.size()});
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t c = 0; c < weights_.size(); ++c) out.at(i, c) = margin(weights_[c], vectors[i]);
  }
  return out;
}

nn::Tensor<double> SvmClassifier::margins(std::span<const text::TokenSequence> docs) const {
  std::vector<text::SparseVector> vectors;
  vectors.reserve(docs.size());
  for (const auto& d : docs) vectors.push_back(tfidf_.transform(d));
  return margins(std::span<const text::SparseVector>(vectors));
}

nn::Tensor<float> SvmClassifier::classify(std::span<const std::string> docs) const {
  if (docs.empty()) throw InvalidArgument("no documents to classify");
  std::vector<text::TokenSequence> tokens;
  tokens.reserve(docs.size());
  for (const auto& d : docs) tokens.push_back(tokenizer_->tokenize(d));
  return margins_to_probabilities(margins(std::span<const text::TokenSequence>(tokens)), mode_);
}

void SvmClassifier::save_state(const fs::path& dir, nlohmann::json& manifest) const {
  tfidf_.save(dir / "tfidf.txt");
  std::ofstream out(dir / "weights.bin", std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write " + (dir / "weights.bin").string());
  io::write_value(out, kWeightsMagic);
  io::write_value(out, kWeightsVersion);
  io::write_value(out, static_cast<std::uint64_t>(weights_.size()));
  io::write_value(out, static_cast<std::uint64_t>(weights_.front().size()));
  for (const auto& w : weights_) io::write_span(out, std::span<const double>(w));
  if (!out) throw StorageError("failed writing " + (dir / "weights.bin").string());
  manifest["tokenizer"] = tokenizer_->name();
}

std::unique_ptr<SvmClassifier> SvmClassifier::load(const fs::path& dir, const nlohmann::json& manifest) {
  auto tfidf = text::TfIdfModel::load(dir / "tfidf.txt");
  std::ifstream in(dir / "weights.bin", std::ios::binary);
  if (!in) throw FormatError("missing " + (dir / "weights.bin").string());
  if (io::read_value<std::uint32_t>(in) != kWeightsMagic) throw FormatError("not an svm weights file");
  const auto version = io::read_value<std::uint32_t>(in);
  if (version != kWeightsVersion) throw FormatError("unsupported svm weights version " + std::to_string(version));
  const auto k = io::read_value<std::uint64_t>(in);
  const auto width = io::read_value<std::uint64_t>(in);
  if (k != manifest.at("classes").get<std::uint64_t>() || width != tfidf.vocabulary_size()) {
    throw FormatError("svm weights do not match the manifest");
  }
  std::vector<std::vector<double>> weights(k, std::vector<double>(width));
  for (auto& w : weights) io::read_span(in, std::span<double>(w));
  try {
    return std::make_unique<SvmClassifier>(std::move(tfidf), std::move(weights),
                                           manifest.at("tokenizer").get<std::string>(),
                                           eval::parse_label_mode(manifest.at("mode").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed svm manifest in " + dir.string() + ": " + e.what());
  }
}

std::vector<Checkpoint> svm_train(const TrainingInput& input, const SvmSettings& settings,
                                  const TrainingCallbacks& callbacks, const TrainingEnvironment& environment) {
  settings.validate();
  validate_training_input(input, settings.mode);
  const auto started = std::chrono::steady_clock::now();
  const auto tokenizer = text::make_tokenizer(settings.tokenizer);
  std::vector<text::TokenSequence> train_tokens, val_tokens;
  for (const auto& d : input.x) train_tokens.push_back(tokenizer->tokenize(d));
  for (const auto& d : input.x_validate) val_tokens.push_back(tokenizer->tokenize(d));

  auto tfidf = text::TfIdfModel::fit(train_tokens);
  std::vector<text::SparseVector> x;
  x.reserve(train_tokens.size());
  for (const auto& d : train_tokens) x.push_back(tfidf.transform(d));

  const std::size_t k = input.y.dim(1);
  const Rng root(settings.seed);
  std::vector<std::vector<double>> weights;
  double objective = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<int> labels(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) labels[i] = input.y.at(i, c) == 1.0f ? 1 : -1;
    auto w = pegasos(x, labels, tfidf.vocabulary_size(), settings, root.fork(c + 1), [&](std::size_t epoch) {
      if (environment.cancel && environment.cancel->load()) throw InterruptedError("training cancelled");
      if (callbacks.progress) {
        callbacks.progress(make_progress(c, k, epoch, settings.epochs,
                                         "class " + std::to_string(c + 1) + "/" + std::to_string(k)));
      }
    });
    double hinge = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) hinge += std::max(0.0, 1.0 - labels[i] * margin(w, x[i]));
    for (double v : w) norm += v * v;
    objective += 0.5 * settings.lambda * norm + hinge / static_cast<double>(x.size());
    weights.push_back(std::move(w));
  }

  auto classifier =
      std::make_shared<const SvmClassifier>(std::move(tfidf), std::move(weights), settings.tokenizer, settings.mode);
  Checkpoint cp;
  cp.epoch = 0;
  cp.y_actual = val_tokens.empty()
                    ? nn::Tensor<float>(nn::Shape{0, k})
                    : margins_to_probabilities(classifier->margins(std::span<const text::TokenSequence>(val_tokens)),
                                               settings.mode);
  cp.classifier = classifier;
  const auto scores = score_validation(input.y_validate, cp.y_actual, settings.mode);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const double loss = objective / static_cast<double>(k);
  cp.statistics = {{"loss", loss},
                   {"val_loss", scores.loss},
                   {"f1_macro", scores.f1_macro},
                   {"f1_micro", scores.f1_micro},
                   {"accuracy", scores.accuracy},
                   {"seconds", seconds}};
  cp.created = now_timestamp();
  if (!environment.stats_csv.empty()) {
    const eval::EpochStats row{0, loss, scores.loss, scores.f1_macro, scores.f1_micro, seconds};
    eval::write_stats_csv(environment.stats_csv, std::span(&row, 1));
  }
  if (callbacks.checkpoint) callbacks.checkpoint(cp);
  return {std::move(cp)};
}

nlohmann::json SvmTrainer::normalize_settings(const nlohmann::json& settings) const {
  return SvmSettings::from_json(settings).to_json();
}

std::vector<Checkpoint> SvmTrainer::train(const TrainingInput& input, const nlohmann::json& settings,
                                          const TrainingCallbacks& callbacks,
                                          const TrainingEnvironment& environment) const {
  return svm_train(input, SvmSettings::from_json(settings), callbacks, environment);
}

std::unique_ptr<Classifier> SvmTrainer::load(const fs::path& dir, const nlohmann::json& manifest) const {
  return SvmClassifier::load(dir, manifest);
}

}  // namespace doccat::classifiers
