#include "doccat/classifiers/cnn.hpp"

#include <chrono>

#include "doccat/classifiers/batch_generator.hpp"
#include "doccat/common/error.hpp"
#include "doccat/common/random.hpp"
#include "doccat/common/timestamp.hpp"
#include "doccat/eval/epoch_stats.hpp"
#include "doccat/nn/adam.hpp"
#include "doccat/nn/serialization.hpp"
#include "settings_reader.hpp"

namespace doccat::classifiers {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kPredictChunk = 64;

nn::LossKind loss_for(eval::LabelMode mode) {
  return mode == eval::LabelMode::multi_class ? nn::LossKind::categorical_cross_entropy
                                              : nn::LossKind::binary_cross_entropy;
}

nn::Tensor<float> predict_tokens(const nn::Network<float>& net, const text::EmbeddingModel& model,
                                 std::span<const text::TokenSequence> docs, std::size_t max_timesteps) {
  const std::size_t k = net.output_shape().back();
  nn::Tensor<float> out(nn::Shape{docs.size(), k});
  for (std::size_t start = 0; start < docs.size(); start += kPredictChunk) {
    const auto chunk = docs.subspan(start, std::min(kPredictChunk, docs.size() - start));
    const auto probs = net.predict(embed_batch(model, chunk, max_timesteps));
    std::copy(probs.values().begin(), probs.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(start * k));
  }
  return out;
}

EmbeddingReference absolute(EmbeddingReference ref) {
  std::error_code ec;
  auto abs = fs::absolute(ref.path, ec);
  if (!ec) ref.path = abs.lexically_normal();
  return ref;
}

}  // namespace

void CnnSettings::validate() const {
  if (filter_lens.empty()) throw InvalidArgument("filter_lens must not be empty");
  for (auto f : filter_lens) {
    if (f < 1) throw InvalidArgument("filter lengths must be at least 1");
    if (f > max_timesteps) throw InvalidArgument("max_timesteps must be at least the longest filter length");
  }
  if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
  if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (filter_count < 1 || dense_size < 1) throw InvalidArgument("layer sizes must be at least 1");
  if (dense_size2 && *dense_size2 < 1) throw InvalidArgument("dense_size2 must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("dropout_rate must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (activation.type == nn::ActivationType::softmax) throw InvalidArgument("softmax is not a hidden activation");
  text::make_tokenizer(tokenizer);
}

CnnSettings CnnSettings::from_json(const nlohmann::json& j) {
  detail::SettingsReader r(j);
  CnnSettings s;
  if (r.has("embedding")) {
    EmbeddingReference ref;
    std::string path;
    r.read("embedding", path);
    ref.path = path;
    std::string format = "word2vec_text";
    r.read("embedding_format", format);
    ref.format = text::parse_embedding_format(format);
    s.embeddings = ref;
  } else if (r.has("embedding_format")) {
    throw InvalidArgument("embedding_format given without embedding");
  }
  r.read("tokenizer", s.tokenizer);
  s.max_timesteps = r.read_size("max_timesteps", s.max_timesteps);
  s.batch_size = r.read_size("batch_size", s.batch_size);
  s.filter_count = r.read_size("filter_count", s.filter_count);
  r.read("filter_lens", s.filter_lens);
  s.dense_size = r.read_size("dense_size", s.dense_size);
  if (r.has("dense_size2")) s.dense_size2 = r.read_size("dense_size2", 0);
  double slope = nn::ActivationKind::kDefaultLeakySlope;
  r.read("leaky_slope", slope);
  std::string activation = "leakyrelu";
  r.read("activation", activation);
  s.activation = nn::parse_activation(activation, slope);
  r.read("dropout_rate", s.dropout_rate);
  s.epochs = r.read_size("epochs", s.epochs);
  std::string mode = eval::label_mode_name(s.mode);
  r.read("mode", mode);
  s.mode = eval::parse_label_mode(mode);
  r.read("seed", s.seed);
  r.read("learning_rate", s.learning_rate);
  r.read("cache", s.cache);
  r.read("prefetch", s.prefetch);
  r.finish();
  s.validate();
  return s;
}

nlohmann::json CnnSettings::to_json() const {
  nlohmann::json j = {{"embedding", nullptr},
                      {"tokenizer", tokenizer},
                      {"max_timesteps", max_timesteps},
                      {"batch_size", batch_size},
                      {"filter_count", filter_count},
                      {"filter_lens", filter_lens},
                      {"dense_size", dense_size},
                      {"dense_size2", nullptr},
                      {"activation", nn::activation_name(activation)},
                      {"dropout_rate", dropout_rate},
                      {"epochs", epochs},
                      {"mode", eval::label_mode_name(mode)},
                      {"seed", seed},
                      {"learning_rate", learning_rate},
                      {"cache", cache},
                      {"prefetch", prefetch}};
  if (embeddings) {
    j["embedding"] = embeddings->path.string();
    j["embedding_format"] = text::embedding_format_name(embeddings->format);
  }
  if (dense_size2) j["dense_size2"] = *dense_size2;
  if (activation.type == nn::ActivationType::leaky_relu) j["leaky_slope"] = activation.slope;
  return j;
}

template <typename T>
nn::Network<T> cnn_build(const CnnSettings& s, std::size_t k, std::size_t dim) {
  s.validate();
  if (k < 2) throw InvalidArgument("a classifier needs at least two classes");
  if (dim < 1) throw InvalidArgument("embedding dimension must be positive");
  nn::Network<T> net(nn::Shape{s.max_timesteps, dim});
  const auto input = net.add(std::make_unique<nn::Dropout<T>>(s.dropout_rate), nn::Network<T>::input());
  std::vector<nn::NodeId> branches;
  for (auto f : s.filter_lens) {
    auto node = net.add(std::make_unique<nn::Conv1D<T>>(s.filter_count, f, dim), input);
    node = net.add(std::make_unique<nn::Activation<T>>(s.activation), node);
    branches.push_back(net.add(std::make_unique<nn::MaxOverTime<T>>(), node));
  }
  auto node = net.add(std::make_unique<nn::Concat<T>>(branches.size()), branches);
  node = net.add(std::make_unique<nn::Dropout<T>>(s.dropout_rate), node);
  std::size_t width = s.filter_count * s.filter_lens.size();
  node = net.add(std::make_unique<nn::Dense<T>>(width, s.dense_size), node);
  node = net.add(std::make_unique<nn::Activation<T>>(s.activation), node);
  width = s.dense_size;
  if (s.dense_size2) {
    node = net.add(std::make_unique<nn::Dense<T>>(width, *s.dense_size2), node);
    node = net.add(std::make_unique<nn::Activation<T>>(s.activation), node);
    width = *s.dense_size2;
  }
  node = net.add(std::make_unique<nn::Dropout<T>>(s.dropout_rate), node);
  node = net.add(std::make_unique<nn::Dense<T>>(width, k), node);
  const auto out = s.mode == eval::LabelMode::multi_class ? nn::ActivationKind::softmax()
                                                           : nn::ActivationKind::sigmoid();
  node = net.add(std::make_unique<nn::Activation<T>>(out), node);
  net.set_output(node);
  return net;
}

template nn::Network<float> cnn_build(const CnnSettings&, std::size_t, std::size_t);
template nn::Network<double> cnn_build(const CnnSettings&, std::size_t, std::size_t);

CnnClassifier::CnnClassifier(std::shared_ptr<const nn::Network<float>> network,
                             std::shared_ptr<const text::EmbeddingModel> embeddings,
                             std::optional<EmbeddingReference> reference, std::string tokenizer,
                             std::size_t max_timesteps, eval::LabelMode mode)
    : network_(std::move(network)),
      embeddings_(std::move(embeddings)),
      reference_(std::move(reference)),
      tokenizer_(text::make_tokenizer(tokenizer)),
      max_timesteps_(max_timesteps),
      mode_(mode) {
  if (!network_ || !embeddings_) throw InvalidArgument("classifier needs a network and embeddings");
  const auto& in = network_->input_shape();
  if (in.size() != 2 || in[0] != max_timesteps_ || in[1] != embeddings_->dim()) {
    throw ShapeError("network input " + nn::to_string(in) + " does not match max_timesteps " +
                     std::to_string(max_timesteps_) + " and embedding dimension " +
                     std::to_string(embeddings_->dim()));
  }
}

nn::Tensor<float> CnnClassifier::classify(std::span<const std::string> docs) const {
  if (docs.empty()) throw InvalidArgument("no documents to classify");
  std::vector<text::TokenSequence> tokens;
  tokens.reserve(docs.size());
  for (const auto& d : docs) tokens.push_back(tokenizer_->tokenize(d));
  return predict_tokens(*network_, *embeddings_, tokens, max_timesteps_);
}

void CnnClassifier::save_state(const fs::path& dir, nlohmann::json& manifest) const {
  nn::save_network(*network_, dir / "network");
  nlohmann::json embedding = {{"dim", embeddings_->dim()}};
  if (reference_) {
    embedding["path"] = reference_->path.string();
    embedding["format"] = text::embedding_format_name(reference_->format);
  } else {
    embeddings_->save(dir / "embeddings.vec", text::EmbeddingFormat::word2vec_text);
    embedding["file"] = "embeddings.vec";
    embedding["format"] = text::embedding_format_name(text::EmbeddingFormat::word2vec_text);
  }
  manifest["embedding"] = embedding;
  manifest["tokenizer"] = tokenizer_->name();
  manifest["max_timesteps"] = max_timesteps_;
}

std::unique_ptr<CnnClassifier> CnnClassifier::load(const fs::path& dir, const nlohmann::json& manifest) {
  try {
    const auto& e = manifest.at("embedding");
    const auto format = text::parse_embedding_format(e.at("format").get<std::string>());
    std::optional<EmbeddingReference> reference;
    fs::path path;
    if (e.contains("file")) {
      path = dir / e.at("file").get<std::string>();
    } else {
      reference = EmbeddingReference{e.at("path").get<std::string>(), format};
      path = reference->path;
    }
    auto embeddings = text::load_shared_embeddings(path, format);
    if (embeddings->dim() != e.at("dim").get<std::size_t>()) {
      throw FormatError("embedding file " + path.string() + " changed dimension");
    }
    auto network = std::make_shared<const nn::Network<float>>(nn::load_network<float>(dir / "network"));
    const auto mode = eval::parse_label_mode(manifest.at("mode").get<std::string>());
    if (network->output_shape().back() != manifest.at("classes").get<std::size_t>()) {
      throw FormatError("network output does not match the class count");
    }
    return std::make_unique<CnnClassifier>(std::move(network), std::move(embeddings), std::move(reference),
                                           manifest.at("tokenizer").get<std::string>(),
                                           manifest.at("max_timesteps").get<std::size_t>(), mode);
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("malformed cnn manifest in " + dir.string() + ": " + ex.what());
  }
}

std::vector<Checkpoint> cnn_train(const TrainingInput& input, const CnnSettings& settings,
                                  const TrainingCallbacks& callbacks, const TrainingEnvironment& environment,
                                  std::shared_ptr<const text::EmbeddingModel> embeddings) {
  settings.validate();
  validate_training_input(input, settings.mode);
  std::optional<EmbeddingReference> reference;
  if (!embeddings) {
    reference = settings.embeddings ? settings.embeddings : environment.default_embeddings;
    if (!reference) throw InvalidArgument("no embedding model configured for cnn training");
    reference = absolute(*reference);
    embeddings = text::load_shared_embeddings(reference->path, reference->format);
  }
  const std::size_t k = input.y.dim(1);
  const auto tokenizer = text::make_tokenizer(settings.tokenizer);
  std::vector<text::TokenSequence> train_tokens, val_tokens;
  for (const auto& d : input.x) train_tokens.push_back(tokenizer->tokenize(d));
  for (const auto& d : input.x_validate) val_tokens.push_back(tokenizer->tokenize(d));

  const Rng root(settings.seed);
  BatchOptions options{settings.batch_size, settings.max_timesteps, root.fork(1).seed(), true,
                       settings.cache ? environment.cache_dir : fs::path{}, settings.prefetch};
  BatchGenerator generator(std::move(train_tokens), input.y, embeddings, options);

  nn::Network<float> net = cnn_build<float>(settings, k, embeddings->dim());
  Rng init = root.fork(2);
  net.initialize(init);
  Rng dropout = root.fork(3);
  nn::AdamState<float> adam(nn::AdamConfig{settings.learning_rate});
  const auto kind = loss_for(settings.mode);
  if (!environment.stats_csv.empty()) eval::write_stats_csv(environment.stats_csv, {});

  std::vector<Checkpoint> checkpoints;
  const std::size_t batches = generator.batch_count();
  for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    std::size_t seen = 0, step = 0;
    generator.run_epoch(epoch, [&](const Batch& batch) {
      if (environment.cancel && environment.cancel->load()) throw InterruptedError("training cancelled");
      if (callbacks.batch_observer) callbacks.batch_observer(batch);
      const auto grads = nn::backward(net, batch.x, batch.y, kind, &dropout);
      if (!std::isfinite(grads.loss)) throw Error("training diverged: non-finite loss");
      auto params = net.parameters();
      adam.step(params, grads.params);
      loss_sum += grads.loss * static_cast<double>(batch.items.size());
      seen += batch.items.size();
      if (callbacks.progress) {
        callbacks.progress(make_progress(epoch, settings.epochs, step, batches,
                                         "epoch " + std::to_string(epoch + 1) + "/" +
                                             std::to_string(settings.epochs)));
      }
      ++step;
    });

    auto frozen = std::make_shared<const nn::Network<float>>(net);
    Checkpoint cp;
    cp.epoch = epoch;
    cp.y_actual = val_tokens.empty() ? nn::Tensor<float>(nn::Shape{0, k})
                                     : predict_tokens(*frozen, *embeddings, val_tokens, settings.max_timesteps);
    cp.classifier = std::make_shared<const CnnClassifier>(frozen, embeddings, reference, settings.tokenizer,
                                                          settings.max_timesteps, settings.mode);
    const auto scores = score_validation(input.y_validate, cp.y_actual, settings.mode);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const double loss = loss_sum / static_cast<double>(seen);
    cp.statistics = {{"loss", loss},
                     {"val_loss", scores.loss},
                     {"f1_macro", scores.f1_macro},
                     {"f1_micro", scores.f1_micro},
                     {"accuracy", scores.accuracy},
                     {"seconds", seconds}};
    cp.created = now_timestamp();
    if (!environment.stats_csv.empty()) {
      eval::append_stats_csv(environment.stats_csv,
                             {epoch, loss, scores.loss, scores.f1_macro, scores.f1_micro, seconds});
    }
    if (callbacks.checkpoint) callbacks.checkpoint(cp);
    checkpoints.push_back(std::move(cp));
  }
  return checkpoints;
}

nlohmann::json CnnTrainer::normalize_settings(const nlohmann::json& settings) const {
  return CnnSettings::from_json(settings).to_json();
}

std::vector<Checkpoint> CnnTrainer::train(const TrainingInput& input, const nlohmann::json& settings,
                                          const TrainingCallbacks& callbacks,
                                          const TrainingEnvironment& environment) const {
  return cnn_train(input, CnnSettings::from_json(settings), callbacks, environment);
}

std::unique_ptr<Classifier> CnnTrainer::load(const fs::path& dir, const nlohmann::json& manifest) const {
  return CnnClassifier::load(dir, manifest);
}

}  // namespace doccat::classifiers
