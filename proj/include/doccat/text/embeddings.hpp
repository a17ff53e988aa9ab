#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "doccat/nn/tensor.hpp"
#include "doccat/text/tokenizer.hpp"

namespace doccat::text {

enum class EmbeddingFormat { word2vec_text, glove_text };

EmbeddingFormat parse_embedding_format(std::string_view name);
std::string embedding_format_name(EmbeddingFormat format);

/// Word -> fixed vector lookup. Vectors are stored contiguously, one row per
/// word in first-insertion order.
class EmbeddingModel {
 public:
  explicit EmbeddingModel(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  /// Inserts or replaces (last write wins).
  void set(std::string word, std::span<const float> vector);

  /// nullptr for out-of-vocabulary words.
  const float* find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word) != nullptr; }

  const std::vector<std::string>& words() const { return words_; }
  std::span<const float> vector(std::size_t row) const {
    return std::span<const float>(data_).subspan(row * dim_, dim_);
  }

  /// word2vec_text: header "count dim", then "word v1 .. v_dim" per line.
  /// glove_text: no header, dimension taken from the first line.
  /// Throws FormatError with the offending line number on malformed input.
  static EmbeddingModel load(const std::filesystem::path& path, EmbeddingFormat format);
  void save(const std::filesystem::path& path, EmbeddingFormat format) const;

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  std::size_t dim_;
  std::vector<std::string> words_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

/// Loads through a process-wide cache keyed by canonical path and format;
/// models stay cached while any caller holds them.
std::shared_ptr<const EmbeddingModel> load_shared_embeddings(const std::filesystem::path& path,
                                                             EmbeddingFormat format);

/// Writes a (max_timesteps x dim) row-major matrix into out: known tokens in
/// order, unknown tokens skipped, zero rows after the last token, tokens past
/// max_timesteps cut.
void embed_into(const EmbeddingModel& model, const TokenSequence& tokens, std::size_t max_timesteps,
                std::span<float> out);

nn::Tensor<float> embed_sequence(const EmbeddingModel& model, const TokenSequence& tokens,
                                 std::size_t max_timesteps);

}  // namespace doccat::text
