#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "doccat/nn/tensor.hpp"
#include "doccat/text/embeddings.hpp"
#include "doccat/text/tokenizer.hpp"

namespace doccat::classifiers {

struct Batch {
  std::size_t index = 0;
  std::vector<std::size_t> items;  // document indices, in row order
  nn::Tensor<float> x;             // rows x max_timesteps x dim
  nn::Tensor<float> y;             // rows x K
};

struct BatchOptions {
  std::size_t batch_size = 200;
  std::size_t max_timesteps = 1000;
  std::uint64_t seed = 0;
  bool shuffle = true;                // shuffle documents into batches once, and batch order per epoch
  std::filesystem::path cache_dir;    // no caching when empty
  bool prefetch = false;              // prepare the next batch on a second thread
};

/// Splits documents into fixed batches and vectorizes them on demand.
///
/// Batch composition is fixed at construction. With a cache directory the
/// first request of a batch writes its tensors to disk and later requests
/// read them back; unreadable, foreign or corrupted cache files are
/// regenerated transparently.
class BatchGenerator {
 public:
  BatchGenerator(std::vector<text::TokenSequence> docs, nn::Tensor<float> y,
                 std::shared_ptr<const text::EmbeddingModel> embeddings, BatchOptions options);
  ~BatchGenerator();

  BatchGenerator(const BatchGenerator&) = delete;
  BatchGenerator& operator=(const BatchGenerator&) = delete;

  std::size_t size() const { return docs_.size(); }
  std::size_t batch_count() const { return members_.size(); }
  const std::vector<std::size_t>& members(std::size_t batch) const { return members_.at(batch); }
  const BatchOptions& options() const { return options_; }

  /// Tensors for one batch, from the cache when possible.
  Batch batch(std::size_t index) const;

  /// Batch visiting order for an epoch; deterministic given the seed.
  std::vector<std::size_t> epoch_order(std::size_t epoch) const;

  /// Feeds every batch of the epoch to consume, in epoch_order.
  void run_epoch(std::size_t epoch, const std::function<void(const Batch&)>& consume) const;

  struct CacheStats {
    std::size_t hits = 0;
    std::size_t writes = 0;
    std::size_t regenerated = 0;
  };
  CacheStats cache_stats() const;

  std::filesystem::path cache_file(std::size_t index) const;

 private:
  Batch compute(std::size_t index) const;
  bool read_cached(std::size_t index, Batch& out) const;
  void write_cached(const Batch& batch) const;

  std::vector<text::TokenSequence> docs_;
  nn::Tensor<float> y_;
  std::shared_ptr<const text::EmbeddingModel> embeddings_;
  BatchOptions options_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::uint64_t> fingerprints_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> writes_{0};
  mutable std::atomic<std::size_t> regenerated_{0};
};

/// Stacks embedded documents into a (docs x max_timesteps x dim) tensor.
nn::Tensor<float> embed_batch(const text::EmbeddingModel& model, std::span<const text::TokenSequence> docs,
                              std::size_t max_timesteps);

}  // namespace doccat::classifiers
