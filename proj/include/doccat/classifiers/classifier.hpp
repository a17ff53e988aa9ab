#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doccat/eval/metrics.hpp"
#include "doccat/nn/tensor.hpp"
#include "doccat/text/embeddings.hpp"

namespace doccat::classifiers {

inline constexpr int kClassifierFormatVersion = 1;

struct EmbeddingReference {
  std::filesystem::path path;
  text::EmbeddingFormat format = text::EmbeddingFormat::word2vec_text;

  friend bool operator==(const EmbeddingReference&, const EmbeddingReference&) = default;
};

/// A trained, immutable classifier. classify() is safe to call concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string trainer_key() const = 0;
  virtual std::size_t classes() const = 0;
  virtual eval::LabelMode mode() const = 0;

  /// N x K probability matrix, rows in input order. Throws InvalidArgument
  /// for an empty request.
  virtual nn::Tensor<float> classify(std::span<const std::string> docs) const = 0;

  /// Writes trainer-specific files into dir and fields into the manifest.
  virtual void save_state(const std::filesystem::path& dir, nlohmann::json& manifest) const = 0;
};

/// Writes <dir>/manifest.json plus the classifier's own files. metadata is
/// stored verbatim and returned by read_classifier_metadata.
void save_classifier(const Classifier& classifier, const std::filesystem::path& dir,
                     const nlohmann::json& metadata = nlohmann::json::object());

/// Throws FormatError for a missing or malformed manifest or an unsupported
/// format version, and NotFoundError for an unknown trainer key.
std::unique_ptr<Classifier> load_classifier(const std::filesystem::path& dir);

nlohmann::json read_classifier_manifest(const std::filesystem::path& dir);
nlohmann::json read_classifier_metadata(const std::filesystem::path& dir);

struct Checkpoint {
  std::size_t epoch = 0;
  std::shared_ptr<const Classifier> classifier;
  nn::Tensor<float> y_actual;                  // predictions for x_validate
  std::map<std::string, double> statistics;    // loss, val_loss, f1_macro, f1_micro, accuracy, seconds
  std::string created;
};

struct Progress {
  std::size_t epoch = 0;
  std::size_t epochs = 1;
  std::size_t batch = 0;
  std::size_t batches = 1;
  double fraction = 0.0;  // overall, in [0, 1]
  std::string message;
};

struct TrainingInput {
  std::span<const std::string> x;
  const nn::Tensor<float>& y;
  std::span<const std::string> x_validate;
  const nn::Tensor<float>& y_validate;
};

struct Batch;

struct TrainingCallbacks {
  std::function<void(const Progress&)> progress;
  std::function<void(const Checkpoint&)> checkpoint;
  /// Sees every batch before it updates parameters.
  std::function<void(const Batch&)> batch_observer;
};

struct TrainingEnvironment {
  /// Batch tensor cache; disabled when empty.
  std::filesystem::path cache_dir;
  /// Used when the settings name no embedding file.
  std::optional<EmbeddingReference> default_embeddings;
  /// Per-epoch statistics CSV; not written when empty.
  std::filesystem::path stats_csv;
  /// Polled between batches; training stops with InterruptedError when set.
  const std::atomic<bool>* cancel = nullptr;
};

/// Checks the labeled-set invariants for x/y and x_validate/y_validate.
/// Throws InvalidArgument or ShapeError.
void validate_training_input(const TrainingInput& input, eval::LabelMode mode);

/// A training algorithm registered under a short key ("cnn", "svm").
class Trainer {
 public:
  virtual ~Trainer() = default;

  virtual std::string key() const = 0;
  virtual std::string name() const = 0;

  /// Complete settings object with every default filled in.
  virtual nlohmann::json default_settings() const = 0;
  /// Null means defaults. Throws InvalidArgument for unknown keys or bad
  /// values, and returns the completed settings.
  virtual nlohmann::json normalize_settings(const nlohmann::json& settings) const = 0;

  virtual std::vector<Checkpoint> train(const TrainingInput& input, const nlohmann::json& settings,
                                        const TrainingCallbacks& callbacks,
                                        const TrainingEnvironment& environment) const = 0;

  virtual std::unique_ptr<Classifier> load(const std::filesystem::path& dir,
                                           const nlohmann::json& manifest) const = 0;
};

/// Built-in trainers in registry order: cnn, svm.
std::span<const Trainer* const> trainers();
/// Throws NotFoundError for an unknown key.
const Trainer& find_trainer(std::string_view key);

/// Validation statistics shared by every trainer.
struct ValidationScores {
  double loss = 0;
  double f1_macro = 0;
  double f1_micro = 0;
  double accuracy = 0;
};
ValidationScores score_validation(const nn::Tensor<float>& y_validate, const nn::Tensor<float>& y_actual,
                                  eval::LabelMode mode);

/// Progress after `batch` (0-based) of `batches` in `epoch` of `epochs`.
Progress make_progress(std::size_t epoch, std::size_t epochs, std::size_t batch, std::size_t batches,
                       std::string message);

}  // namespace doccat::classifiers
