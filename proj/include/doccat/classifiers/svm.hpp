#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "doccat/classifiers/classifier.hpp"
#include "doccat/text/tfidf.hpp"
#include "doccat/text/tokenizer.hpp"

namespace doccat::classifiers {

struct SvmSettings {
  double lambda = 1e-4;
  std::size_t epochs = 20;
  eval::LabelMode mode = eval::LabelMode::multi_class;
  std::string tokenizer = "word";
  std::uint64_t seed = 0;

  void validate() const;
  /// Keys: lambda, epochs, mode, tokenizer, seed. Null gives the defaults.
  static SvmSettings from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// One-vs-rest linear SVMs over L2-normalized tf-idf vectors. Each class has
/// a weight vector over the vocabulary and no intercept.
class SvmClassifier final : public Classifier {
 public:
  SvmClassifier(text::TfIdfModel tfidf, std::vector<std::vector<double>> weights, std::string tokenizer,
                eval::LabelMode mode);

  std::string trainer_key() const override { return "svm"; }
  std::size_t classes() const override { return weights_.size(); }
  eval::LabelMode mode() const override { return mode_; }

  /// Softmax of the margins (multi_class) or per-class sigmoid
  /// (multi_label).
  nn::Tensor<float> classify(std::span<const std::string> docs) const override;
  void save_state(const std::filesystem::path& dir, nlohmann::json& manifest) const override;

  /// N x K raw margins w_c . x + b_c.
  nn::Tensor<double> margins(std::span<const text::TokenSequence> docs) const;
  nn::Tensor<double> margins(std::span<const text::SparseVector> vectors) const;

  const text::TfIdfModel& tfidf() const { return tfidf_; }
  const std::vector<std::vector<double>>& weights() const { return weights_; }

  static std::unique_ptr<SvmClassifier> load(const std::filesystem::path& dir, const nlohmann::json& manifest);

 private:
  text::TfIdfModel tfidf_;
  std::vector<std::vector<double>> weights_;  // K x V
  std::shared_ptr<const text::Tokenizer> tokenizer_;
  eval::LabelMode mode_;
};

/// Margins to probabilities: softmax per row or element-wise sigmoid.
nn::Tensor<float> margins_to_probabilities(const nn::Tensor<double>& margins, eval::LabelMode mode);

/// Pegasos subgradient descent on the L2-regularized hinge loss, one binary
/// problem per class; emits a single checkpoint.
std::vector<Checkpoint> svm_train(const TrainingInput& input, const SvmSettings& settings,
                                  const TrainingCallbacks& callbacks, const TrainingEnvironment& environment);

class SvmTrainer final : public Trainer {
 public:
  std::string key() const override { return "svm"; }
  std::string name() const override { return "Linear support vector machine"; }
  nlohmann::json default_settings() const override { return SvmSettings{}.to_json(); }
  nlohmann::json normalize_settings(const nlohmann::json& settings) const override;
  std::vector<Checkpoint> train(const TrainingInput& input, const nlohmann::json& settings,
                                const TrainingCallbacks& callbacks,
                                const TrainingEnvironment& environment) const override;
  std::unique_ptr<Classifier> load(const std::filesystem::path& dir, const nlohmann::json& manifest) const override;
};

}  // namespace doccat::classifiers
