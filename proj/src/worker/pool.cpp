#include "doccat/worker/pool.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "doccat/common/error.hpp"

namespace doccat::worker {

WorkerPool::WorkerPool(TaskQueue& queue, WorkerOptions options) : queue_(queue), options_(std::move(options)) {}

WorkerPool::~WorkerPool() { stop(); }

void WorkerPool::start() {
  if (running()) return;
  const std::size_t orphaned = queue_.repository().fail_running_tasks("interrupted: worker restarted");
  if (orphaned) spdlog::warn("marked {} interrupted task(s) as failed", orphaned);
  stop_ = false;
  for (std::size_t i = 0; i < options_.training_workers; ++i) threads_.emplace_back([this] { loop(kTrainingQueue); });
  for (std::size_t i = 0; i < options_.classification_workers; ++i) {
    threads_.emplace_back([this] { loop(kClassifyQueue); });
  }
}

void WorkerPool::stop() {
  stop_ = true;
  queue_.notify();
  for (auto& t : threads_) t.join();
  threads_.clear();
}

void WorkerPool::loop(const char* queue_name) {
  const std::string name = queue_name;
  while (!stop_) {
    const auto task = queue_.claim(name, options_.poll, &stop_);
    if (!task) continue;
    spdlog::info("{} task {} started", name, task->id);
    if (name == kTrainingQueue) {
      execute_training(*task);
    } else {
      execute_classification(*task);
    }
  }
}

void WorkerPool::execute_training(const repo::TaskRecord& task) {
  try {
    auto& repository = queue_.repository();
    const auto session = repository.training_session_for_task(task.id);
    if (!session) throw NotFoundError("no training session for task " + task.id);
    TrainingContext context;
    context.default_embeddings = options_.default_embeddings;
    context.cache_batches = options_.cache_batches;
    context.cancel = &stop_;
    context.progress = [&](const TaskProgress& p) { queue_.report(task.id, p); };
    const auto result = run_training(repository, session->id, context);
    queue_.succeed(task.id, result);
    spdlog::info("training task {} succeeded", task.id);
  } catch (const std::exception& e) {
    spdlog::error("training task {} failed: {}", task.id, e.what());
    queue_.fail(task.id, e.what());
  }
}

void WorkerPool::execute_classification(const repo::TaskRecord& task) {
  try {
    const auto payload = nlohmann::json::parse(task.payload);
    const auto results =
        run_classification(queue_.repository(), cache_, payload.at("classifier_id").get<repo::Id>(),
                           payload.at("document_ids").get<std::vector<repo::Id>>());
    queue_.succeed(task.id, to_json(results));
  } catch (const std::exception& e) {
    spdlog::error("classification task {} failed: {}", task.id, e.what());
    queue_.fail(task.id, e.what());
  }
}

std::vector<DocumentClassification> WorkerPool::classify(repo::Id classifier_id,
                                                         const std::vector<repo::Id>& document_ids,
                                                         std::chrono::milliseconds timeout) {
  auto& repository = queue_.repository();
  const auto classifier = repository.get_classifier(classifier_id);
  if (!classifier.active_checkpoint_id) {
    throw ConflictError(fmt::format("classifier {} is not trained", classifier_id));
  }
  for (const repo::Id id : document_ids) {
    std::optional<repo::DocumentRecord> doc;
    try {
      doc = repository.get_document(id);
    } catch (const NotFoundError&) {
      throw InvalidArgument(fmt::format("document {} does not exist", id));
    }
    if (!doc->path) throw InvalidArgument(fmt::format("document {} has no content", id));
  }
  if (document_ids.empty()) return {};

  const auto task =
      queue_.submit(kClassifyQueue, {{"classifier_id", classifier_id}, {"document_ids", document_ids}});
  const auto done = queue_.wait(task.id, timeout);
  if (done.state == repo::TaskState::success) return classifications_from_json(done.result);
  if (done.state == repo::TaskState::failure) throw Error("classification failed: " + done.error);
  throw InterruptedError(fmt::format("classification task {} did not finish in time", task.id));
}

}  // namespace doccat::worker
