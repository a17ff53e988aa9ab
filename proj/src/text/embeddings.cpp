#include "doccat/text/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>

#include <fmt/format.h>

#include "doccat/common/error.hpp"

namespace doccat::text {

namespace fs = std::filesystem;

EmbeddingFormat parse_embedding_format(std::string_view name) {
  if (name == "word2vec_text" || name == "word2vec") return EmbeddingFormat::word2vec_text;
  if (name == "glove_text" || name == "glove") return EmbeddingFormat::glove_text;
  throw InvalidArgument("unknown embedding format '" + std::string(name) + "'");
}

std::string embedding_format_name(EmbeddingFormat format) {
  return format == EmbeddingFormat::word2vec_text ? "word2vec_text" : "glove_text";
}

EmbeddingModel::EmbeddingModel(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw InvalidArgument("embedding dimension must be positive");
}

void EmbeddingModel::set(std::string word, std::span<const float> vector) {
  if (vector.size() != dim_) {
    throw ShapeError("embedding vector has " + std::to_string(vector.size()) + " components, expected " +
                     std::to_string(dim_));
  }
  if (word.empty()) throw InvalidArgument("embedding word must not be empty");
  auto it = index_.find(word);
  if (it != index_.end()) {
    std::copy(vector.begin(), vector.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
    return;
  }
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  data_.insert(data_.end(), vector.begin(), vector.end());
}

const float* EmbeddingModel::find(std::string_view word) const {
  auto it = index_.find(word);
  return it == index_.end() ? nullptr : data_.data() + it->second * dim_;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

float parse_float(std::string_view field, std::size_t line_no) {
  float value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw FormatError(fmt::format("line {}: '{}' is not a number", line_no, field));
  }
  return value;
}

std::size_t parse_count(std::string_view field, std::size_t line_no) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw FormatError(fmt::format("line {}: '{}' is not a count", line_no, field));
  }
  return value;
}

}  // namespace

EmbeddingModel EmbeddingModel::load(const fs::path& path, EmbeddingFormat format) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_count = 0;
  std::size_t dim = 0;
  std::size_t records = 0;
  std::vector<float> values;
  std::optional<EmbeddingModel> model;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };

  if (format == EmbeddingFormat::word2vec_text) {
    if (!next_line()) throw FormatError("empty embedding file " + path.string());
    const auto header = split_fields(line);
    if (header.size() != 2) throw FormatError("line 1: expected header 'vocab_count dim'");
    expected_count = parse_count(header[0], line_no);
    dim = parse_count(header[1], line_no);
    if (dim == 0) throw FormatError("line 1: embedding dimension must be positive");
    model.emplace(dim);
  }
  while (next_line()) {
    const auto fields = split_fields(line);
    if (fields.size() < 2) throw FormatError(fmt::format("line {}: expected a word followed by numbers", line_no));
    if (!model) {
      dim = fields.size() - 1;
      model.emplace(dim);
    }
    if (fields.size() - 1 != dim) {
      throw FormatError(fmt::format("line {}: dimension mismatch, {} values where {} expected", line_no,
                                    fields.size() - 1, dim));
    }
    values.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) values[k] = parse_float(fields[k + 1], line_no);
    model->set(std::string(fields[0]), values);
    ++records;
  }
  if (records == 0) throw FormatError("embedding file " + path.string() + " contains no vectors");
  if (format == EmbeddingFormat::word2vec_text && records != expected_count) {
    throw FormatError(fmt::format("header announces {} vectors but file contains {}", expected_count, records));
  }
  return std::move(*model);
}

void EmbeddingModel::save(const fs::path& path, EmbeddingFormat format) const {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write embedding file " + path.string());
  if (format == EmbeddingFormat::word2vec_text) out << size() << ' ' << dim_ << '\n';
  std::string buffer;
  for (std::size_t row = 0; row < words_.size(); ++row) {
    buffer = words_[row];
    for (float v : vector(row)) fmt::format_to(std::back_inserter(buffer), " {}", v);
    buffer += '\n';
    out << buffer;
  }
  if (!out) throw StorageError("failed writing embedding file " + path.string());
}

void embed_into(const EmbeddingModel& model, const TokenSequence& tokens, std::size_t max_timesteps,
                std::span<float> out) {
  const std::size_t dim = model.dim();
  if (max_timesteps == 0) throw InvalidArgument("max_timesteps must be at least 1");
  if (out.size() != max_timesteps * dim) throw ShapeError("embedding output buffer has the wrong size");
  std::size_t row = 0;
  for (const auto& token : tokens) {
    if (row == max_timesteps) break;
    if (const float* v = model.find(token)) {
      std::copy(v, v + dim, out.begin() + static_cast<std::ptrdiff_t>(row * dim));
      ++row;
    }
  }
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(row * dim), out.end(), 0.0f);
}

nn::Tensor<float> embed_sequence(const EmbeddingModel& model, const TokenSequence& tokens,
                                 std::size_t max_timesteps) {
  if (max_timesteps == 0) throw InvalidArgument("max_timesteps must be at least 1");
  nn::Tensor<float> out(nn::Shape{max_timesteps, model.dim()});
  embed_into(model, tokens, max_timesteps, out.values());
  return out;
}

std::shared_ptr<const EmbeddingModel> load_shared_embeddings(const std::filesystem::path& path,
                                                             EmbeddingFormat format) {
  static std::mutex mutex;
  static std::map<std::pair<std::string, EmbeddingFormat>, std::weak_ptr<const EmbeddingModel>> cache;
  std::error_code ec;
  auto canonical = std::filesystem::weakly_canonical(path, ec);
  const auto key = std::make_pair((ec ? path : canonical).string(), format);
  std::lock_guard lock(mutex);
  if (auto hit = cache[key].lock()) return hit;
  auto model = std::make_shared<const EmbeddingModel>(EmbeddingModel::load(path, format));
  cache[key] = model;
  return model;
}

}  // namespace doccat::text
