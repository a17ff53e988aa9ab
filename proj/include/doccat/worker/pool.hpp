#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <optional>
#include <thread>
#include <vector>

#include "doccat/worker/runners.hpp"
#include "doccat/worker/task_queue.hpp"

namespace doccat::worker {

struct WorkerOptions {
  std::size_t training_workers = 1;
  std::size_t classification_workers = 1;
  std::optional<classifiers::EmbeddingReference> default_embeddings;
  bool cache_batches = true;
  /// How often idle workers look for tasks submitted by other processes.
  std::chrono::milliseconds poll{500};
};

/// In-process workers consuming the training and classification queues.
///
/// start() first marks tasks left in PROGRESS by an earlier run as FAILURE;
/// PENDING tasks stay queued. stop() cancels running trainings, which then
/// fail with an interruption error, and joins every thread.
class WorkerPool {
 public:
  WorkerPool(TaskQueue& queue, WorkerOptions options);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void start();
  void stop();
  bool running() const { return !threads_.empty(); }

  TaskQueue& queue() { return queue_; }
  ClassifierCache& cache() { return cache_; }

  /// Validates the request, runs it on the classification queue and waits
  /// for the result. Throws NotFoundError for an unknown classifier,
  /// ConflictError when it is untrained, InvalidArgument naming a missing
  /// document and InterruptedError when the timeout elapses.
  std::vector<DocumentClassification> classify(repo::Id classifier_id, const std::vector<repo::Id>& document_ids,
                                               std::chrono::milliseconds timeout);

 private:
  void loop(const char* queue_name);
  void execute_training(const repo::TaskRecord& task);
  void execute_classification(const repo::TaskRecord& task);

  TaskQueue& queue_;
  WorkerOptions options_;
  ClassifierCache cache_;
  std::atomic<bool> stop_{false};
  std::vector<std::thread> threads_;
};

}  // namespace doccat::worker
