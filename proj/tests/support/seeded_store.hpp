#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "doccat/eval/synthetic.hpp"
#include "doccat/repo/repository.hpp"

namespace doccat::testing {

/// Ids of a labeled synthetic corpus stored in a repository.
struct SeededStore {
  repo::CollectionRecord collection;
  std::vector<repo::Id> documents;
  std::vector<std::size_t> labels;
  repo::SchemaRecord schema;
  repo::AttributeRecord attribute;
  std::vector<repo::Id> values;  // class index -> value id
  repo::ClassificationSetRecord set;
  repo::ClassifierRecord classifier;
  std::filesystem::path embeddings;
};

/// Stores every document of the corpus with content and one label each,
/// creates a classifier on the category attribute and writes the corpus
/// embeddings next to the data root as word2vec text.
inline SeededStore seed_store(repo::Repository& repository, const eval::SyntheticOptions& options,
                              const std::string& suffix = "") {
  const auto corpus = eval::synthetic_corpus(options);
  SeededStore s;
  s.collection = repository.create_collection("corpus" + suffix, "Synthetic corpus");
  repo::SchemaInput schema{"schema" + suffix, "Schema", {{"category", "Category", {}}}};
  for (std::size_t c = 0; c < options.classes; ++c) {
    schema.attributes[0].values.push_back({"class" + std::to_string(c), std::nullopt});
  }
  s.schema = repository.create_schema(schema);
  s.attribute = repository.attributes(s.schema.id)[0];
  for (const auto& v : repository.attribute_values(s.attribute.id)) s.values.push_back(v.id);
  s.set = repository.create_classification_set(s.collection.id, s.schema.id, "set" + suffix, "Labels");
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    const auto doc = repository.create_document(s.collection.id, {.code = "doc" + std::to_string(i)});
    repository.store_document_content(doc.id, corpus.text(i));
    repository.add_labels(s.set.id, doc.id, {s.values[corpus.labels[i]]});
    s.documents.push_back(doc.id);
    s.labels.push_back(corpus.labels[i]);
  }
  s.classifier = repository.create_classifier(s.attribute.id, "classifier" + suffix, "Classifier");
  s.embeddings = repository.data_root() / ("embeddings" + suffix + ".vec");
  corpus.embeddings.save(s.embeddings, text::EmbeddingFormat::word2vec_text);
  return s;
}

}  // namespace doccat::testing
