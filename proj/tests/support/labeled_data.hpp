#pragma once

#include <memory>
#include <string>
#include <vector>

#include "doccat/classifiers/classifier.hpp"
#include "doccat/common/random.hpp"
#include "doccat/eval/split.hpp"
#include "doccat/eval/synthetic.hpp"

namespace doccat::testing {

/// A synthetic corpus split into owned training and validation sets.
struct LabeledData {
  std::vector<std::string> x, x_validate;
  std::vector<std::size_t> labels, labels_validate;
  nn::Tensor<float> y, y_validate;
  std::shared_ptr<const text::EmbeddingModel> embeddings;
  std::size_t classes = 0;

  classifiers::TrainingInput input() const { return {x, y, x_validate, y_validate}; }
};

inline LabeledData make_labeled_data(const eval::SyntheticOptions& options, double fraction = 0.1,
                                     std::uint64_t split_seed = 1) {
  const auto corpus = eval::synthetic_corpus(options);
  Rng rng(split_seed);
  const auto split = eval::split_validation(corpus.labels, options.classes, fraction, rng, 1);
  LabeledData d;
  d.classes = options.classes;
  std::vector<std::vector<std::size_t>> y, yv;
  for (auto i : split.train) {
    d.x.push_back(corpus.text(i));
    d.labels.push_back(corpus.labels[i]);
    y.push_back({corpus.labels[i]});
  }
  for (auto i : split.validation) {
    d.x_validate.push_back(corpus.text(i));
    d.labels_validate.push_back(corpus.labels[i]);
    yv.push_back({corpus.labels[i]});
  }
  d.y = eval::to_indicator(y, options.classes);
  d.y_validate = eval::to_indicator(yv, options.classes);
  d.embeddings = std::make_shared<const text::EmbeddingModel>(corpus.embeddings);
  return d;
}

}  // namespace doccat::testing
