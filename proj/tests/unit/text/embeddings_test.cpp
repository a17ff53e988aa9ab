#include <gtest/gtest.h>

#include <fstream>

#include "doccat/common/random.hpp"
#include "doccat/text/embeddings.hpp"
#include "support/temp_dir.hpp"

using namespace doccat::text;
using doccat::FormatError;

namespace {

std::filesystem::path write(const doccat::testing::TempDir& dir, const std::string& name, const std::string& body) {
  auto p = dir.path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST(LoadEmbeddings, Glove) {
  doccat::testing::TempDir tmp;
  auto m = EmbeddingModel::load(write(tmp, "g.txt", "cat 1 2 3\ndog 4 5 6\n"), EmbeddingFormat::glove_text);
  EXPECT_EQ(m.dim(), 3u);
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.find("dog")[1], 5.0f);
  EXPECT_EQ(m.find("bird"), nullptr);
}

TEST(LoadEmbeddings, Word2VecHeader) {
  doccat::testing::TempDir tmp;
  auto m = EmbeddingModel::load(write(tmp, "w.txt", "2 4\na 1 2 3 4\nb 0.5 -1e-3 0 1\n"),
                                EmbeddingFormat::word2vec_text);
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.dim(), 4u);
  EXPECT_FLOAT_EQ(m.find("b")[1], -1e-3f);
}

TEST(LoadEmbeddings, DimensionMismatch) {
  doccat::testing::TempDir tmp;
  EXPECT_THROW(EmbeddingModel::load(write(tmp, "g.txt", "a 1 2 3\nb 1 2\n"), EmbeddingFormat::glove_text),
               FormatError);
  EXPECT_THROW(EmbeddingModel::load(write(tmp, "w.txt", "1 3\na 1 2\n"), EmbeddingFormat::word2vec_text),
               FormatError);
}

TEST(LoadEmbeddings, Malformed) {
  doccat::testing::TempDir tmp;
  EXPECT_THROW(EmbeddingModel::load(write(tmp, "e.txt", ""), EmbeddingFormat::glove_text), FormatError);
  EXPECT_THROW(EmbeddingModel::load(write(tmp, "e2.txt", ""), EmbeddingFormat::word2vec_text), FormatError);
  EXPECT_THROW(EmbeddingModel::load(write(tmp, "n.txt", "a 1 x 3\n"), EmbeddingFormat::glove_text), FormatError);
  EXPECT_THROW(EmbeddingModel::load(write(tmp, "h.txt", "3 2\na 1 2\n"), EmbeddingFormat::word2vec_text),
               FormatError);
  EXPECT_THROW(EmbeddingModel::load(write(tmp, "w.txt", "lonely\n"), EmbeddingFormat::glove_text), FormatError);
  EXPECT_THROW(EmbeddingModel::load(tmp.path() / "missing.txt", EmbeddingFormat::glove_text), FormatError);
}

TEST(LoadEmbeddings, DuplicateLastWins) {
  doccat::testing::TempDir tmp;
  auto m = EmbeddingModel::load(write(tmp, "g.txt", "a 1 1\nb 2 2\na 3 3\n"), EmbeddingFormat::glove_text);
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.find("a")[0], 3.0f);
}

TEST(LoadEmbeddings, SaveReloadIdenticalLookups) {
  doccat::testing::TempDir tmp;
  doccat::Rng rng(9);
  EmbeddingModel m(7);
  std::vector<float> v(7);
  for (int w = 0; w < 200; ++w) {
    for (auto& x : v) x = static_cast<float>(rng.normal());
    m.set("w" + std::to_string(w), v);
  }
  for (auto format : {EmbeddingFormat::glove_text, EmbeddingFormat::word2vec_text}) {
    const auto path = tmp.path() / ("m-" + embedding_format_name(format));
    m.save(path, format);
    auto back = EmbeddingModel::load(path, format);
    ASSERT_EQ(back.size(), m.size());
    for (const auto& word : m.words()) {
      for (std::size_t k = 0; k < 7; ++k) ASSERT_EQ(back.find(word)[k], m.find(word)[k]);
    }
  }
}

TEST(EmbedSequence, PadsWithZeros) {
  EmbeddingModel m(2);
  m.set("a", std::vector<float>{1, 2});
  m.set("b", std::vector<float>{3, 4});
  auto t = embed_sequence(m, {"a", "zzz", "b"}, 4);
  EXPECT_EQ(t.shape(), (doccat::nn::Shape{4, 2}));
  EXPECT_EQ(std::vector<float>(t.values().begin(), t.values().end()), (std::vector<float>{1, 2, 3, 4, 0, 0, 0, 0}));
}

TEST(EmbedSequence, TruncatesLongDocuments) {
  EmbeddingModel m(1);
  TokenSequence tokens;
  for (int i = 0; i < 10; ++i) {
    m.set("t" + std::to_string(i), std::vector<float>{static_cast<float>(i)});
    tokens.push_back("t" + std::to_string(i));
  }
  auto t = embed_sequence(m, tokens, 5);
  EXPECT_EQ(std::vector<float>(t.values().begin(), t.values().end()), (std::vector<float>{0, 1, 2, 3, 4}));
}

TEST(EmbedSequence, AllUnknownIsZero) {
  EmbeddingModel m(3);
  m.set("a", std::vector<float>{1, 1, 1});
  auto t = embed_sequence(m, {"x", "y"}, 3);
  for (float v : t.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(embed_sequence(m, {"a"}, 0), doccat::InvalidArgument);
}

TEST(EmbedSequence, ShapeAndOrderProperty) {
  doccat::Rng rng(1);
  EmbeddingModel m(2);
  for (int i = 0; i < 20; ++i) m.set("k" + std::to_string(i), std::vector<float>{float(i), float(-i)});
  for (int trial = 0; trial < 100; ++trial) {
    TokenSequence tokens;
    std::vector<float> expected;
    const auto n = rng.uniform_index(30);
    for (std::uint64_t i = 0; i < n; ++i) {
      if (rng.uniform() < 0.3) {
        tokens.push_back("oov");
      } else {
        const int k = static_cast<int>(rng.uniform_index(20));
        tokens.push_back("k" + std::to_string(k));
        expected.push_back(float(k));
      }
    }
    const std::size_t steps = 1 + rng.uniform_index(15);
    auto t = embed_sequence(m, tokens, steps);
    ASSERT_EQ(t.shape(), (doccat::nn::Shape{steps, 2}));
    for (std::size_t r = 0; r < steps; ++r) {
      const float want = r < expected.size() ? expected[r] : 0.0f;
      ASSERT_EQ(t.at(r, 0), want);
    }
  }
}
