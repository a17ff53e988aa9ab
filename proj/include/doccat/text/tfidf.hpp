#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "doccat/text/tokenizer.hpp"

namespace doccat::text {

/// (term index, weight) pairs sorted by index.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

inline constexpr int kTfIdfFormatVersion = 1;

/// Document frequencies over a fitted corpus. Vocabulary indices follow the
/// lexicographic order of terms.
class TfIdfModel {
 public:
  /// Throws InvalidArgument on an empty corpus.
  static TfIdfModel fit(std::span<const TokenSequence> corpus);

  std::size_t document_count() const { return documents_; }
  std::size_t vocabulary_size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }

  std::optional<std::uint32_t> index(std::string_view term) const;
  /// 0 for unknown terms.
  std::size_t df(std::string_view term) const;
  /// ln(|D| / df) for a vocabulary index.
  double idf(std::uint32_t index) const;

  /// tf(t, d) * ln(|D| / df(t)) with raw counts for tf; unknown terms are
  /// ignored. When normalize is set the vector is scaled to unit L2 norm
  /// (left as is when all weights are zero).
  SparseVector transform(const TokenSequence& doc, bool normalize = true) const;

  void save(std::ostream& out) const;
  static TfIdfModel load(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static TfIdfModel load(const std::filesystem::path& path);

 private:
  void build_index();

  std::size_t documents_ = 0;
  std::vector<std::string> terms_;
  std::vector<std::uint32_t> df_;
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
};

double dot(const SparseVector& a, std::span<const double> dense);
double l2_norm(const SparseVector& v);

}  // namespace doccat::text
