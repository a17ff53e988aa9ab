#include "doccat/eval/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <unordered_map>

#include "doccat/common/error.hpp"

namespace doccat::eval {
namespace {

TEST(SyntheticTest, ShapesAndLabels) {
  const auto c = synthetic_corpus({.classes = 3, .per_class = 10, .vocab_size = 90, .overlap = 0.2, .doc_len = 15});
  ASSERT_EQ(c.documents.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(c.labels[i], i % 3);
    EXPECT_EQ(c.documents[i].size(), 15u);
  }
  EXPECT_EQ(c.shared_vocabulary.size(), 18u);
  for (const auto& pool : c.class_vocabulary) EXPECT_EQ(pool.size(), 24u);
  EXPECT_EQ(c.embeddings.size(), 18u + 72u);
}

TEST(SyntheticTest, EmbeddingsAreUnitVectors) {
  const auto c = synthetic_corpus({.classes = 2, .per_class = 2, .vocab_size = 20, .dim = 16});
  for (std::size_t row = 0; row < c.embeddings.size(); ++row) {
    double norm = 0;
    for (float v : c.embeddings.vector(row)) norm += double{v} * v;
    EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-6);
  }
  for (const auto& doc : c.documents) {
    for (const auto& w : doc) EXPECT_TRUE(c.embeddings.contains(w));
  }
}

TEST(SyntheticTest, DisjointVocabulariesAllowPerfectUnigramRule) {
  const auto c = synthetic_corpus({.classes = 4, .per_class = 25, .vocab_size = 100, .overlap = 0.0, .doc_len = 20});
  std::unordered_map<std::string, std::size_t> owner;
  for (std::size_t k = 0; k < c.class_vocabulary.size(); ++k) {
    for (const auto& w : c.class_vocabulary[k]) owner[w] = k;
  }
  for (std::size_t i = 0; i < c.documents.size(); ++i) {
    std::set<std::size_t> votes;
    for (const auto& w : c.documents[i]) votes.insert(owner.at(w));
    ASSERT_EQ(votes.size(), 1u);
    EXPECT_EQ(*votes.begin(), c.labels[i]);
  }
}

TEST(SyntheticTest, FullOverlapUsesOnlySharedWords) {
  const auto c = synthetic_corpus({.classes = 3, .per_class = 5, .vocab_size = 30, .overlap = 1.0, .doc_len = 10});
  const std::set<std::string> shared(c.shared_vocabulary.begin(), c.shared_vocabulary.end());
  EXPECT_EQ(shared.size(), 30u);
  for (const auto& doc : c.documents) {
    for (const auto& w : doc) EXPECT_TRUE(shared.count(w));
  }
}

TEST(SyntheticTest, SameSeedSameCorpus) {
  const SyntheticOptions o{.classes = 3, .per_class = 8, .vocab_size = 60, .overlap = 0.4, .doc_len = 12, .seed = 17};
  const auto a = synthetic_corpus(o);
  const auto b = synthetic_corpus(o);
  EXPECT_EQ(a.documents, b.documents);
  for (std::size_t row = 0; row < a.embeddings.size(); ++row) {
    const auto va = a.embeddings.vector(row), vb = b.embeddings.vector(row);
    EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin()));
  }
  auto other = o;
  other.seed = 18;
  EXPECT_NE(synthetic_corpus(other).documents, a.documents);
}

TEST(SyntheticTest, TextIsTokenizableBack) {
  const auto c = synthetic_corpus({.classes = 2, .per_class = 1, .vocab_size = 10, .doc_len = 5});
  EXPECT_EQ(text::word_tokenize(c.text(0)), c.documents[0]);
}

TEST(SyntheticTest, RejectsBadOptions) {
  EXPECT_THROW(synthetic_corpus({.classes = 1}), InvalidArgument);
  EXPECT_THROW(synthetic_corpus({.classes = 5, .vocab_size = 4, .overlap = 0.0}), InvalidArgument);
  EXPECT_THROW(synthetic_corpus({.classes = 2, .overlap = 1.5}), InvalidArgument);
}

TEST(PseudoWordTest, DistinctAndAlphabetic) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < 2000; ++i) {
    const auto w = pseudo_word(i, 3);
    for (char ch : w) EXPECT_TRUE(ch >= 'a' && ch <= 'z');
    seen.insert(w);
  }
  EXPECT_EQ(seen.size(), 2000u);
  EXPECT_THROW(pseudo_word(26 * 26 * 26, 3), InvalidArgument);
}

}  // namespace
}  // namespace doccat::eval
