#include "doccat/classifiers/batch_generator.hpp"

#include <fmt/format.h>

#include <fstream>
#include <future>
#include <numeric>
#include <utility>

#include "doccat/common/binary_io.hpp"
#include "doccat/common/error.hpp"
#include "doccat/common/random.hpp"

namespace doccat::classifiers {

namespace {

constexpr std::uint32_t kCacheMagic = 0x54424344;  // "DCBT"
constexpr std::uint32_t kCacheVersion = 1;

}  // namespace

nn::Tensor<float> embed_batch(const text::EmbeddingModel& model, std::span<const text::TokenSequence> docs,
                              std::size_t max_timesteps) {
  nn::Tensor<float> x(nn::Shape{docs.size(), max_timesteps, model.dim()});
  for (std::size_t i = 0; i < docs.size(); ++i) text::embed_into(model, docs[i], max_timesteps, x.row(i));
  return x;
}

BatchGenerator::BatchGenerator(std::vector<text::TokenSequence> docs, nn::Tensor<float> y,
                               std::shared_ptr<const text::EmbeddingModel> embeddings, BatchOptions options)
    : docs_(std::move(docs)), y_(std::move(y)), embeddings_(std::move(embeddings)), options_(std::move(options)) {
  if (docs_.empty()) throw InvalidArgument("batch generator needs at least one document");
  if (options_.batch_size == 0) throw InvalidArgument("batch_size must be at least 1");
  if (options_.max_timesteps == 0) throw InvalidArgument("max_timesteps must be at least 1");
  if (!embeddings_) throw InvalidArgument("batch generator needs an embedding model");
  if (y_.rank() != 2 || y_.dim(0) != docs_.size()) throw ShapeError("labels do not match the documents");

  std::vector<std::size_t> order(docs_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options_.shuffle) {
    Rng rng = Rng(options_.seed).fork(0);
    rng.shuffle(std::span(order));
  }
  for (std::size_t start = 0; start < order.size(); start += options_.batch_size) {
    const std::size_t end = std::min(order.size(), start + options_.batch_size);
    members_.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                          order.begin() + static_cast<std::ptrdiff_t>(end));
  }

  const std::size_t k = y_.dim(1);
  for (const auto& items : members_) {
    io::Fnv1a h;
    const std::uint64_t header[] = {options_.max_timesteps, embeddings_->dim(), k, items.size()};
    h.update(std::span<const std::uint64_t>(header));
    for (auto i : items) {
      h.update(&i, sizeof i);
      for (const auto& token : docs_[i]) h.update(token.data(), token.size() + 1);
      h.update(std::as_const(y_).row(i));
    }
    fingerprints_.push_back(h.digest());
  }
  if (!options_.cache_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(options_.cache_dir, ec);
    if (ec) throw StorageError("cannot create cache directory " + options_.cache_dir.string());
  }
}

BatchGenerator::~BatchGenerator() = default;

std::filesystem::path BatchGenerator::cache_file(std::size_t index) const {
  return options_.cache_dir / fmt::format("batch-{:06}.bin", index);
}

Batch BatchGenerator::compute(std::size_t index) const {
  Batch b;
  b.index = index;
  b.items = members_.at(index);
  b.y = nn::Tensor<float>(nn::Shape{b.items.size(), y_.dim(1)});
  for (std::size_t r = 0; r < b.items.size(); ++r) {
    const auto src = y_.row(b.items[r]);
    std::copy(src.begin(), src.end(), b.y.row(r).begin());
  }
  b.x = nn::Tensor<float>(nn::Shape{b.items.size(), options_.max_timesteps, embeddings_->dim()});
  for (std::size_t r = 0; r < b.items.size(); ++r) {
    text::embed_into(*embeddings_, docs_[b.items[r]], options_.max_timesteps, b.x.row(r));
  }
  return b;
}

bool BatchGenerator::read_cached(std::size_t index, Batch& out) const {
  std::ifstream in(cache_file(index), std::ios::binary);
  if (!in) return false;
  try {
    if (io::read_value<std::uint32_t>(in) != kCacheMagic) return false;
    if (io::read_value<std::uint32_t>(in) != kCacheVersion) return false;
    if (io::read_value<std::uint64_t>(in) != fingerprints_[index]) return false;
    const auto& items = members_[index];
    const nn::Shape xs{items.size(), options_.max_timesteps, embeddings_->dim()};
    const nn::Shape ys{items.size(), y_.dim(1)};
    Batch b;
    b.index = index;
    b.items = items;
    b.x = nn::Tensor<float>(xs);
    b.y = nn::Tensor<float>(ys);
    io::read_span(in, b.x.values());
    io::read_span(in, b.y.values());
    io::Fnv1a h;
    h.update(std::span<const float>(b.x.values()));
    h.update(std::span<const float>(b.y.values()));
    if (io::read_value<std::uint64_t>(in) != h.digest()) return false;
    if (in.peek() != std::char_traits<char>::eof()) return false;
    out = std::move(b);
    return true;
  } catch (const FormatError&) {
    return false;
  }
}

void BatchGenerator::write_cached(const Batch& b) const {
  const auto path = cache_file(b.index);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write batch cache " + tmp);
    io::write_value(out, kCacheMagic);
    io::write_value(out, kCacheVersion);
    io::write_value(out, fingerprints_[b.index]);
    io::write_span(out, std::span<const float>(b.x.values()));
    io::write_span(out, std::span<const float>(b.y.values()));
    io::Fnv1a h;
    h.update(std::span<const float>(b.x.values()));
    h.update(std::span<const float>(b.y.values()));
    io::write_value(out, h.digest());
    if (!out) throw StorageError("failed writing batch cache " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot finalize batch cache " + path.string());
}

Batch BatchGenerator::batch(std::size_t index) const {
  if (index >= members_.size()) throw InvalidArgument("batch index out of range");
  if (options_.cache_dir.empty()) return compute(index);
  Batch b;
  if (read_cached(index, b)) {
    ++hits_;
    return b;
  }
  if (std::filesystem::exists(cache_file(index))) ++regenerated_;
  b = compute(index);
  write_cached(b);
  ++writes_;
  return b;
}

std::vector<std::size_t> BatchGenerator::epoch_order(std::size_t epoch) const {
  std::vector<std::size_t> order(members_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options_.shuffle) {
    Rng rng = Rng(options_.seed).fork(epoch + 1);
    rng.shuffle(std::span(order));
  }
  return order;
}

void BatchGenerator::run_epoch(std::size_t epoch, const std::function<void(const Batch&)>& consume) const {
  const auto order = epoch_order(epoch);
  if (!options_.prefetch || order.size() < 2) {
    for (auto index : order) consume(batch(index));
    return;
  }
  auto next = std::async(std::launch::async, [this, i = order[0]] { return batch(i); });
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    Batch current = next.get();
    if (pos + 1 < order.size()) {
      next = std::async(std::launch::async, [this, i = order[pos + 1]] { return batch(i); });
    }
    try {
      consume(current);
    } catch (...) {
      if (next.valid()) next.wait();
      throw;
    }
  }
}

BatchGenerator::CacheStats BatchGenerator::cache_stats() const { return {hits_, writes_, regenerated_}; }

}  // namespace doccat::classifiers
