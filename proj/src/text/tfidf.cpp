#include "doccat/text/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "doccat/common/error.hpp"

namespace doccat::text {

TfIdfModel TfIdfModel::fit(std::span<const TokenSequence> corpus) {
  if (corpus.empty()) throw InvalidArgument("cannot fit tf-idf on an empty corpus");
  std::map<std::string, std::uint32_t, std::less<>> counts;
  std::vector<std::string_view> seen;
  for (const auto& doc : corpus) {
    seen.assign(doc.begin(), doc.end());
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (auto term : seen) {
      auto it = counts.find(term);
      if (it == counts.end()) it = counts.emplace(std::string(term), 0).first;
      ++it->second;
    }
  }
  TfIdfModel model;
  model.documents_ = corpus.size();
  model.terms_.reserve(counts.size());
  model.df_.reserve(counts.size());
  for (auto& [term, df] : counts) {
    model.terms_.push_back(term);
    model.df_.push_back(df);
  }
  model.build_index();
  return model;
}

void TfIdfModel::build_index() {
  index_.clear();
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], static_cast<std::uint32_t>(i));
}

std::optional<std::uint32_t> TfIdfModel::index(std::string_view term) const {
  auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t TfIdfModel::df(std::string_view term) const {
  auto i = index(term);
  return i ? df_[*i] : 0;
}

double TfIdfModel::idf(std::uint32_t i) const {
  return std::log(static_cast<double>(documents_) / static_cast<double>(df_.at(i)));
}

SparseVector TfIdfModel::transform(const TokenSequence& doc, bool normalize) const {
  std::map<std::uint32_t, std::uint32_t> tf;
  for (const auto& token : doc) {
    if (auto i = index(token)) ++tf[*i];
  }
  SparseVector out;
  out.reserve(tf.size());
  for (auto [i, count] : tf) {
    const double w = static_cast<double>(count) * idf(i);
    if (w != 0.0) out.emplace_back(i, w);
  }
  if (normalize) {
    const double norm = l2_norm(out);
    if (norm > 0.0) {
      for (auto& [i, w] : out) w /= norm;
    }
  }
  return out;
}

void TfIdfModel::save(std::ostream& out) const {
  out << "doccat-tfidf " << kTfIdfFormatVersion << '\n' << documents_ << ' ' << terms_.size() << '\n';
  for (std::size_t i = 0; i < terms_.size(); ++i) out << terms_[i] << ' ' << df_[i] << '\n';
  if (!out) throw StorageError("failed writing tf-idf model");
}

TfIdfModel TfIdfModel::load(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "doccat-tfidf") throw FormatError("not a tf-idf model file");
  if (version != kTfIdfFormatVersion) {
    throw FormatError("unsupported tf-idf format version " + std::to_string(version));
  }
  TfIdfModel model;
  std::size_t terms = 0;
  if (!(in >> model.documents_ >> terms) || model.documents_ == 0) throw FormatError("malformed tf-idf header");
  model.terms_.resize(terms);
  model.df_.resize(terms);
  for (std::size_t i = 0; i < terms; ++i) {
    if (!(in >> model.terms_[i] >> model.df_[i])) throw FormatError("truncated tf-idf model");
    if (model.df_[i] == 0 || model.df_[i] > model.documents_) throw FormatError("tf-idf document frequency out of range");
  }
  model.build_index();
  return model;
}

void TfIdfModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write " + path.string());
  save(out);
}

TfIdfModel TfIdfModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return load(in);
}

double dot(const SparseVector& a, std::span<const double> dense) {
  double sum = 0.0;
  for (const auto& [i, w] : a) sum += w * dense[i];
  return sum;
}

double l2_norm(const SparseVector& v) {
  double sum = 0.0;
  for (const auto& [i, w] : v) sum += w * w;
  return std::sqrt(sum);
}

}  // namespace doccat::text
