#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "doccat/text/embeddings.hpp"
#include "doccat/text/tokenizer.hpp"

namespace doccat::eval {

struct SyntheticOptions {
  std::size_t classes = 5;
  std::size_t per_class = 200;
  std::size_t vocab_size = 1000;
  double overlap = 0.2;
  std::size_t doc_len = 120;
  std::size_t dim = 50;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<text::TokenSequence> documents;
  std::vector<std::size_t> labels;
  std::vector<std::string> shared_vocabulary;
  std::vector<std::vector<std::string>> class_vocabulary;
  text::EmbeddingModel embeddings{1};

  /// Document i as whitespace-joined text.
  std::string text(std::size_t i) const;
};

/// A shared pool of round(overlap * V) words plus K private pools of
/// (V - shared) / K words each. Every token is drawn from the shared pool
/// with probability overlap and from the document's class pool otherwise.
/// Document i has class i mod K. Every word gets a seeded random unit
/// vector. Throws InvalidArgument for K < 2, overlap outside [0, 1], an
/// empty document length or a vocabulary too small for K private pools.
SyntheticCorpus synthetic_corpus(const SyntheticOptions& options);

/// Lowercase alphabetic pseudo-word for an index; distinct indices give
/// distinct words.
std::string pseudo_word(std::size_t index, std::size_t width);

}  // namespace doccat::eval
