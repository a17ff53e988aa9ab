#include "doccat/eval/synthetic.hpp"

#include <cmath>

#include "doccat/common/error.hpp"
#include "doccat/common/random.hpp"

namespace doccat::eval {

std::string SyntheticCorpus::text(std::size_t i) const { return text::join(documents.at(i)); }

std::string pseudo_word(std::size_t index, std::size_t width) {
  std::string word(width, 'a');
  for (std::size_t pos = width; pos-- > 0 && index > 0; index /= 26) {
    word[pos] = static_cast<char>('a' + index % 26);
  }
  if (index > 0) throw InvalidArgument("pseudo-word index does not fit the width");
  return word;
}

SyntheticCorpus synthetic_corpus(const SyntheticOptions& o) {
  if (o.classes < 2) throw InvalidArgument("synthetic corpus needs at least two classes");
  if (!(o.overlap >= 0.0 && o.overlap <= 1.0)) throw InvalidArgument("overlap must lie in [0, 1]");
  if (o.doc_len == 0 || o.per_class == 0 || o.dim == 0) {
    throw InvalidArgument("document length, documents per class and dimension must be positive");
  }
  const auto shared = static_cast<std::size_t>(std::llround(o.overlap * static_cast<double>(o.vocab_size)));
  const std::size_t private_size = (o.vocab_size - std::min(shared, o.vocab_size)) / o.classes;
  if (o.overlap < 1.0 && private_size == 0) {
    throw InvalidArgument("vocabulary of " + std::to_string(o.vocab_size) + " words is too small for " +
                          std::to_string(o.classes) + " class pools");
  }
  if (o.overlap > 0.0 && shared == 0) throw InvalidArgument("vocabulary too small for a shared pool");

  std::size_t width = 3;
  for (std::size_t cap = 26 * 26 * 26; cap < o.vocab_size; cap *= 26) ++width;

  SyntheticCorpus corpus;
  std::size_t next = 0;
  for (std::size_t i = 0; i < shared; ++i) corpus.shared_vocabulary.push_back(pseudo_word(next++, width));
  corpus.class_vocabulary.resize(o.classes);
  for (auto& pool : corpus.class_vocabulary) {
    for (std::size_t i = 0; i < private_size; ++i) pool.push_back(pseudo_word(next++, width));
  }

  const Rng root(o.seed);
  Rng docs = root.fork(1);
  const std::size_t n = o.classes * o.per_class;
  corpus.documents.reserve(n);
  corpus.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % o.classes;
    const auto& own = corpus.class_vocabulary[label];
    text::TokenSequence doc;
    doc.reserve(o.doc_len);
    for (std::size_t t = 0; t < o.doc_len; ++t) {
      const bool from_shared = own.empty() || docs.uniform() < o.overlap;
      const auto& pool = from_shared ? corpus.shared_vocabulary : own;
      doc.push_back(pool[docs.uniform_index(pool.size())]);
    }
    corpus.documents.push_back(std::move(doc));
    corpus.labels.push_back(label);
  }

  Rng vectors = root.fork(2);
  corpus.embeddings = text::EmbeddingModel(o.dim);
  std::vector<float> v(o.dim);
  auto add = [&](const std::string& word) {
    double norm = 0.0;
    std::vector<double> raw(o.dim);
    while (norm == 0.0) {
      norm = 0.0;
      for (auto& x : raw) {
        x = vectors.normal();
        norm += x * x;
      }
    }
    norm = std::sqrt(norm);
    for (std::size_t d = 0; d < o.dim; ++d) v[d] = static_cast<float>(raw[d] / norm);
    corpus.embeddings.set(word, v);
  };
  for (const auto& w : corpus.shared_vocabulary) add(w);
  for (const auto& pool : corpus.class_vocabulary) {
    for (const auto& w : pool) add(w);
  }
  return corpus;
}

}  // namespace doccat::eval
