#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "doccat/repo/repository.hpp"

namespace doccat::worker {

inline constexpr const char* kTrainingQueue = "training_queue";
inline constexpr const char* kClassifyQueue = "classify_queue";

struct TaskProgress {
  std::string message;
  double progress = 0.0;  // in [0, 1]
};

struct TaskSnapshot {
  std::string id;
  std::string queue;
  repo::TaskState state = repo::TaskState::pending;
  std::optional<TaskProgress> progress;  // live, only while known to this process
  nlohmann::json result;                 // null until SUCCESS
  std::string error;
};

/// Persistent queue on top of the repository task table. States are stored;
/// live progress is kept in memory and merged into snapshots.
class TaskQueue {
 public:
  explicit TaskQueue(repo::Repository& repository) : repo_(repository) {}

  repo::Repository& repository() { return repo_; }

  repo::TaskRecord submit(const std::string& queue, const nlohmann::json& payload);
  /// Wakes waiters of submit(); used when tasks were created directly
  /// through the repository.
  void notify();

  /// Blocks until a PENDING task of the queue could be claimed, the timeout
  /// elapses or cancel is set (followed by notify()). Claims are exclusive
  /// across threads and processes sharing the store.
  std::optional<repo::TaskRecord> claim(const std::string& queue, std::chrono::milliseconds timeout,
                                        const std::atomic<bool>* cancel = nullptr);

  /// Progress only moves forward; smaller values keep the earlier fraction.
  void report(const std::string& task_id, TaskProgress progress);
  repo::TaskRecord succeed(const std::string& task_id, const nlohmann::json& result);
  repo::TaskRecord fail(const std::string& task_id, const std::string& error);

  /// Throws NotFoundError for an unknown id.
  TaskSnapshot snapshot(const std::string& task_id);
  /// Waits for a terminal state. Returns the last snapshot when the timeout
  /// elapses first.
  TaskSnapshot wait(const std::string& task_id, std::chrono::milliseconds timeout);

 private:
  repo::Repository& repo_;
  mutable std::mutex mu_;
  std::condition_variable submitted_;
  std::condition_variable finished_;
  std::map<std::string, TaskProgress> live_;
  std::uint64_t generation_ = 0;
};

}  // namespace doccat::worker
