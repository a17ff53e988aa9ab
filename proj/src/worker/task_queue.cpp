#include "doccat/worker/task_queue.hpp"

#include <algorithm>

namespace doccat::worker {

repo::TaskRecord TaskQueue::submit(const std::string& queue, const nlohmann::json& payload) {
  auto task = repo_.create_task(queue, payload.dump());
  notify();
  return task;
}

void TaskQueue::notify() {
  {
    std::lock_guard lock(mu_);
    ++generation_;
  }
  submitted_.notify_all();
}

std::optional<repo::TaskRecord> TaskQueue::claim(const std::string& queue, std::chrono::milliseconds timeout,
                                                 const std::atomic<bool>* cancel) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto cancelled = [&] { return cancel && cancel->load(); };
  std::unique_lock lock(mu_);
  while (!cancelled()) {
    const auto generation = generation_;
    lock.unlock();
    auto task = repo_.claim_task(queue);
    lock.lock();
    if (task) {
      live_[task->id] = {"started", 0.0};
      return task;
    }
    if (!submitted_.wait_until(lock, deadline, [&] { return cancelled() || generation_ != generation; })) break;
  }
  return std::nullopt;
}

void TaskQueue::report(const std::string& task_id, TaskProgress progress) {
  std::lock_guard lock(mu_);
  progress.progress = std::clamp(progress.progress, 0.0, 1.0);
  auto& current = live_[task_id];
  current.message = std::move(progress.message);
  current.progress = std::max(current.progress, progress.progress);
}

repo::TaskRecord TaskQueue::succeed(const std::string& task_id, const nlohmann::json& result) {
  report(task_id, {"finished", 1.0});
  auto task = repo_.finish_task(task_id, repo::TaskState::success, result.dump(), "");
  finished_.notify_all();
  return task;
}

repo::TaskRecord TaskQueue::fail(const std::string& task_id, const std::string& error) {
  auto task = repo_.finish_task(task_id, repo::TaskState::failure, "", error);
  finished_.notify_all();
  return task;
}

TaskSnapshot TaskQueue::snapshot(const std::string& task_id) {
  const auto task = repo_.get_task(task_id);
  TaskSnapshot s{task.id, task.queue, task.state, std::nullopt, nullptr, task.error};
  if (!task.result.empty()) s.result = nlohmann::json::parse(task.result);
  std::lock_guard lock(mu_);
  if (const auto it = live_.find(task_id); it != live_.end()) s.progress = it->second;
  return s;
}

TaskSnapshot TaskQueue::wait(const std::string& task_id, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto s = snapshot(task_id);
    if (repo::is_terminal(s.state)) return s;
    std::unique_lock lock(mu_);
    // Polls as well, since another process may finish the task.
    const auto until = std::min(deadline, std::chrono::steady_clock::now() + std::chrono::milliseconds(200));
    finished_.wait_until(lock, until);
    if (std::chrono::steady_clock::now() >= deadline) {
      lock.unlock();
      return snapshot(task_id);
    }
  }
}

}  // namespace doccat::worker
