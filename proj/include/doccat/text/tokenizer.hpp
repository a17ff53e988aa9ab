#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace doccat::text {

/// Ordered, lowercased word tokens; never empty strings, never whitespace.
using TokenSequence = std::vector<std::string>;

/// Token pattern: maximal runs of Unicode letters, combining marks, decimal
/// digits and apostrophes (' and U+2019), after simple Unicode lowercasing.
/// Runs made only of apostrophes are dropped. A hyphen followed by a line
/// break (with optional surrounding spaces or tabs) between two word
/// characters is removed, joining the word split across lines. Invalid
/// UTF-8 sequences act as separators.
TokenSequence word_tokenize(std::string_view text);

/// Splits after a run of '.', '?' or '!' that is followed by whitespace.
/// Sentences are trimmed; empty ones are dropped.
std::vector<std::string> sentence_tokenize(std::string_view text);

std::string join(const TokenSequence& tokens, std::string_view separator = " ");

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::string name() const = 0;
  virtual TokenSequence tokenize(std::string_view text) const = 0;
};

/// word_tokenize over the whole text.
class WordTokenizer final : public Tokenizer {
 public:
  std::string name() const override { return "word"; }
  TokenSequence tokenize(std::string_view text) const override { return word_tokenize(text); }
};

/// Sentence split first, then word_tokenize per sentence, concatenated.
class SentenceWordTokenizer final : public Tokenizer {
 public:
  std::string name() const override { return "sentence_word"; }
  TokenSequence tokenize(std::string_view text) const override;
};

/// "word" or "sentence_word"; throws InvalidArgument otherwise.
std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view name);

}  // namespace doccat::text
