#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doccat/classifiers/classifier.hpp"
#include "doccat/repo/repository.hpp"
#include "doccat/worker/task_queue.hpp"

namespace doccat::worker {

/// Registers every built-in trainer in the repository's trainers table.
void register_trainers(repo::Repository& repository);

/// Checks references and settings, then creates the training session and its
/// PENDING task in one transaction. Throws NotFoundError for unknown ids and
/// InvalidArgument for a classifier attribute outside the set's schema or
/// bad settings. Null settings mean the trainer defaults.
repo::TrainingSessionRecord submit_training(TaskQueue& queue, repo::Id classifier_id, repo::Id set_id,
                                           repo::Id trainer_id, const nlohmann::json& settings);

struct TrainingContext {
  /// Used when the settings name no embedding file.
  std::optional<classifiers::EmbeddingReference> default_embeddings;
  bool cache_batches = true;
  const std::atomic<bool>* cancel = nullptr;
  std::function<void(const TaskProgress&)> progress;
};

/// Builds the labeled set of the session's classification set for the
/// classifier's attribute, splits off a stratified validation set, trains
/// and records one checkpoint per epoch under
/// <data_root>/checkpoints/<session>/<epoch>/. The checkpoint score is the
/// validation macro-F1; the best checkpoint becomes the classifier's active
/// one. Class i is the attribute's i-th value in ascending id order.
/// Returns a summary with the checkpoint ids and the active checkpoint.
nlohmann::json run_training(repo::Repository& repository, repo::Id session_id, const TrainingContext& context);

struct TaskStatus {
  TaskSnapshot task;
  std::optional<repo::TrainingSessionRecord> session;  // for training tasks
  std::vector<repo::CheckpointRecord> checkpoints;     // recorded so far, oldest first
};

/// Live task state merged with the checkpoints persisted for its session.
/// Throws NotFoundError for an unknown task id.
TaskStatus query_task(TaskQueue& queue, const std::string& task_id);

struct DocumentClassification {
  repo::Id document_id = 0;
  std::vector<repo::Id> value_ids;
  std::vector<double> probabilities;  // one per attribute value, in class order
};

/// Loaded classifiers keyed by checkpoint id. Thread-safe.
class ClassifierCache {
 public:
  std::shared_ptr<const classifiers::Classifier> get(repo::Repository& repository,
                                                     const repo::CheckpointRecord& checkpoint);
  void clear();

 private:
  std::mutex mu_;
  std::map<repo::Id, std::shared_ptr<const classifiers::Classifier>> loaded_;
};

/// Classifies stored documents with the classifier's active checkpoint.
/// Throws ConflictError when the classifier has no active checkpoint and
/// InvalidArgument naming the first unknown document or one without
/// content.
std::vector<DocumentClassification> run_classification(repo::Repository& repository, ClassifierCache& cache,
                                                       repo::Id classifier_id,
                                                       const std::vector<repo::Id>& document_ids);

nlohmann::json to_json(const std::vector<DocumentClassification>& results);
std::vector<DocumentClassification> classifications_from_json(const nlohmann::json& j);

/// Metadata stored with every checkpoint artifact.
struct CheckpointMetadata {
  repo::Id attribute_id = 0;
  std::vector<repo::Id> class_values;  // attribute value id per class index
  std::vector<repo::Id> validation_documents;
};
CheckpointMetadata read_checkpoint_metadata(const std::filesystem::path& dir);

/// Validation predictions saved next to a checkpoint artifact, rows in
/// validation_documents order.
nn::Tensor<float> read_checkpoint_predictions(const std::filesystem::path& dir);

}  // namespace doccat::worker
