#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "doccat/classifiers/classifier.hpp"
#include "doccat/nn/activation.hpp"
#include "doccat/nn/network.hpp"
#include "doccat/text/tokenizer.hpp"

namespace doccat::classifiers {

struct CnnSettings {
  std::optional<EmbeddingReference> embeddings;
  std::string tokenizer = "word";
  std::size_t max_timesteps = 1000;
  std::size_t batch_size = 200;
  std::size_t filter_count = 200;
  std::vector<std::size_t> filter_lens{1, 2, 3};
  std::size_t dense_size = 100;
  std::optional<std::size_t> dense_size2;
  nn::ActivationKind activation = nn::ActivationKind::leaky_relu();
  double dropout_rate = 0.3;
  std::size_t epochs = 50;
  eval::LabelMode mode = eval::LabelMode::multi_class;
  std::uint64_t seed = 0;
  double learning_rate = 0.001;
  bool cache = true;
  bool prefetch = true;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;

  /// Keys: embedding, embedding_format, tokenizer, max_timesteps, batch_size,
  /// filter_count, filter_lens, dense_size, dense_size2, activation,
  /// leaky_slope, dropout_rate, epochs, mode, seed, learning_rate, cache,
  /// prefetch. Null gives the defaults; unknown keys are rejected.
  static CnnSettings from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// input (max_timesteps x dim) -> dropout -> per filter length
/// {conv1d -> activation -> max_over_time} -> concat -> dropout ->
/// dense(dense_size) -> activation -> [dense(dense_size2) -> activation] ->
/// dropout -> dense(K) -> softmax (multi_class) or sigmoid (multi_label).
template <typename T>
nn::Network<T> cnn_build(const CnnSettings& settings, std::size_t k, std::size_t dim);

class CnnClassifier final : public Classifier {
 public:
  CnnClassifier(std::shared_ptr<const nn::Network<float>> network,
                std::shared_ptr<const text::EmbeddingModel> embeddings, std::optional<EmbeddingReference> reference,
                std::string tokenizer, std::size_t max_timesteps, eval::LabelMode mode);

  std::string trainer_key() const override { return "cnn"; }
  std::size_t classes() const override { return network_->output_shape().back(); }
  eval::LabelMode mode() const override { return mode_; }
  nn::Tensor<float> classify(std::span<const std::string> docs) const override;
  void save_state(const std::filesystem::path& dir, nlohmann::json& manifest) const override;

  const nn::Network<float>& network() const { return *network_; }
  std::size_t max_timesteps() const { return max_timesteps_; }

  static std::unique_ptr<CnnClassifier> load(const std::filesystem::path& dir, const nlohmann::json& manifest);

 private:
  std::shared_ptr<const nn::Network<float>> network_;
  std::shared_ptr<const text::EmbeddingModel> embeddings_;
  std::optional<EmbeddingReference> reference_;
  std::shared_ptr<const text::Tokenizer> tokenizer_;
  std::size_t max_timesteps_;
  eval::LabelMode mode_;
};

/// Trains with Adam on mini-batches and records one checkpoint per epoch.
/// embeddings overrides the settings' embedding reference when given.
std::vector<Checkpoint> cnn_train(const TrainingInput& input, const CnnSettings& settings,
                                  const TrainingCallbacks& callbacks, const TrainingEnvironment& environment,
                                  std::shared_ptr<const text::EmbeddingModel> embeddings = nullptr);

class CnnTrainer final : public Trainer {
 public:
  std::string key() const override { return "cnn"; }
  std::string name() const override { return "Convolutional neural network"; }
  nlohmann::json default_settings() const override { return CnnSettings{}.to_json(); }
  nlohmann::json normalize_settings(const nlohmann::json& settings) const override;
  std::vector<Checkpoint> train(const TrainingInput& input, const nlohmann::json& settings,
                                const TrainingCallbacks& callbacks,
                                const TrainingEnvironment& environment) const override;
  std::unique_ptr<Classifier> load(const std::filesystem::path& dir, const nlohmann::json& manifest) const override;
};

}  // namespace doccat::classifiers
