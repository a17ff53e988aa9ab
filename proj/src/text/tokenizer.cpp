#include "doccat/text/tokenizer.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "doccat/common/error.hpp"

namespace doccat::text {

namespace {

constexpr UChar32 kRightSingleQuote = 0x2019;

bool is_apostrophe(UChar32 c) { return c == '\'' || c == kRightSingleQuote; }

bool is_alnum(UChar32 c) {
  return (U_GET_GC_MASK(c) & (U_GC_L_MASK | U_GC_M_MASK | U_GC_ND_MASK)) != 0;
}

bool is_word_char(UChar32 c) { return is_alnum(c) || is_apostrophe(c); }

bool is_hspace(UChar32 c) { return c == ' ' || c == '\t'; }

std::vector<UChar32> decode(std::string_view text) {
  std::vector<UChar32> out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c);  // negative for ill-formed input
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(buf, n, U8_MAX_LENGTH, c, error);
  if (!error) out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

// Length of a "-<spaces>\n<spaces>" run starting at i (the hyphen), or 0.
std::size_t soft_break_length(const std::vector<UChar32>& cps, std::size_t i) {
  if (cps[i] != '-') return 0;
  std::size_t j = i + 1;
  while (j < cps.size() && is_hspace(cps[j])) ++j;
  if (j < cps.size() && cps[j] == '\r') ++j;
  if (j >= cps.size() || cps[j] != '\n') return 0;
  ++j;
  while (j < cps.size() && is_hspace(cps[j])) ++j;
  return j - i;
}

bool is_space(UChar32 c) { return c >= 0 && u_isUWhiteSpace(c); }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

}  // namespace

TokenSequence word_tokenize(std::string_view text) {
  const std::vector<UChar32> cps = decode(text);
  TokenSequence tokens;
  std::string current;
  bool has_alnum = false;
  auto flush = [&] {
    if (has_alnum) tokens.push_back(std::move(current));
    current.clear();
    has_alnum = false;
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const UChar32 c = cps[i];
    if (c >= 0 && is_word_char(c)) {
      append_utf8(current, u_tolower(c));
      has_alnum = has_alnum || is_alnum(c);
      continue;
    }
    if (!current.empty() && c == '-') {
      const std::size_t skip = soft_break_length(cps, i);
      const std::size_t next = i + skip;
      if (skip && next < cps.size() && cps[next] >= 0 && is_word_char(cps[next])) {
        i = next - 1;
        continue;
      }
    }
    flush();
  }
  flush();
  return tokens;
}

std::vector<std::string> sentence_tokenize(std::string_view text) {
  std::vector<std::string> sentences;
  auto emit = [&](std::string_view piece) {
    piece = trim(piece);
    if (!piece.empty()) sentences.emplace_back(piece);
  };
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  std::size_t start = 0;
  int32_t i = 0;
  while (i < length) {
    const char ch = text[static_cast<std::size_t>(i)];
    if (ch == '.' || ch == '?' || ch == '!') {
      int32_t j = i;
      while (j < length && (text[j] == '.' || text[j] == '?' || text[j] == '!')) ++j;
      int32_t k = j;
      UChar32 next = 0;
      if (k < length) U8_NEXT(s, k, length, next);
      if (j >= length || is_space(next)) {
        emit(text.substr(start, static_cast<std::size_t>(j) - start));
        start = static_cast<std::size_t>(j);
      }
      i = j;
      continue;
    }
    UChar32 c;
    U8_NEXT(s, i, length, c);
  }
  emit(text.substr(start));
  return sentences;
}

std::string join(const TokenSequence& tokens, std::string_view separator) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += separator;
    out += tokens[i];
  }
  return out;
}

TokenSequence SentenceWordTokenizer::tokenize(std::string_view text) const {
  TokenSequence out;
  for (const auto& sentence : sentence_tokenize(text)) {
    auto words = word_tokenize(sentence);
    out.insert(out.end(), std::make_move_iterator(words.begin()), std::make_move_iterator(words.end()));
  }
  return out;
}

std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view name) {
  if (name == "word") return std::make_shared<WordTokenizer>();
  if (name == "sentence_word") return std::make_shared<SentenceWordTokenizer>();
  throw InvalidArgument("unknown tokenizer '" + std::string(name) + "'");
}

}  // namespace doccat::text
