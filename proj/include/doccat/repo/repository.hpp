#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "doccat/repo/records.hpp"

namespace doccat::repo {

struct RepositoryOptions {
  std::filesystem::path data_root;
  /// "sqlite:///abs/path.db", a plain file path, or ":memory:". Empty means
  /// <data_root>/repo.db.
  std::string database;
  /// Logs every executed statement at debug level.
  bool echo = false;
};

/// Resolves a DATABASE setting against the data root. Throws
/// InvalidArgument for an unsupported scheme.
std::string resolve_database(const std::string& database, const std::filesystem::path& data_root);

struct ValueInput {
  std::string code;
  std::optional<std::string> name;
};

struct AttributeInput {
  std::optional<std::string> code;
  std::optional<std::string> name;
  std::vector<ValueInput> values;
};

struct SchemaInput {
  std::optional<std::string> code;
  std::optional<std::string> name;
  std::vector<AttributeInput> attributes;
};

/// Relational store for every entity plus document content and checkpoint
/// artifacts on the file system.
///
/// Thread-safe: one handle is shared by the service and all workers, and
/// calls are serialized internally. Missing ids raise NotFoundError, code
/// collisions within a scope raise ConflictError, broken invariants raise
/// InvalidArgument and database or file failures raise StorageError.
class Repository {
 public:
  explicit Repository(RepositoryOptions options);
  ~Repository();
  Repository(const Repository&) = delete;
  Repository& operator=(const Repository&) = delete;

  const std::filesystem::path& data_root() const;

  /// Runs body atomically. Nested calls join the outer transaction.
  void transaction(const std::function<void()>& body);

  // Schemas, attributes and values. A schema is created as a whole.
  SchemaRecord create_schema(const SchemaInput& input);
  SchemaRecord get_schema(Id id);
  Page<SchemaRecord> list_schemas(const Paging& paging = {}, const Filter& filter = {});
  void delete_schema(Id id);
  std::vector<AttributeRecord> attributes(Id schema_id);
  AttributeRecord get_attribute(Id id);
  std::vector<AttributeValueRecord> attribute_values(Id attribute_id);
  AttributeValueRecord get_attribute_value(Id id);

  CollectionRecord create_collection(std::optional<std::string> code, std::optional<std::string> name);
  CollectionRecord get_collection(Id id);
  Page<CollectionRecord> list_collections(const Paging& paging = {}, const Filter& filter = {});
  void delete_collection(Id id);

  DocumentRecord create_document(Id collection_id, const DocumentFields& fields);
  DocumentRecord get_document(Id id);
  Page<DocumentRecord> list_documents(Id collection_id, const Paging& paging = {}, const Filter& filter = {});
  void delete_document(Id id);
  /// Writes <data_root>/documents/<collection_id>/<doc_id>.txt, replacing any
  /// earlier content.
  void store_document_content(Id document_id, std::string_view text);
  /// Throws NotFoundError when no content was stored.
  std::string load_document_content(Id document_id);

  ClassificationSetRecord create_classification_set(Id collection_id, Id schema_id, std::optional<std::string> code,
                                                    std::optional<std::string> name);
  ClassificationSetRecord get_classification_set(Id id);
  Page<ClassificationSetRecord> list_classification_sets(const Paging& paging = {}, const Filter& filter = {});
  void delete_classification_set(Id id);

  /// Adds one label per value. The document must belong to the set's
  /// collection and every value to the set's schema. Existing labels are
  /// kept; repeated values are ignored.
  std::vector<LabelRecord> add_labels(Id set_id, Id document_id, const std::vector<Id>& value_ids);
  std::vector<LabelRecord> labels(Id set_id);
  std::vector<LabelRecord> document_labels(Id set_id, Id document_id);
  /// Returns the number of labels removed.
  std::size_t delete_document_labels(Id set_id, Id document_id);

  /// Registers a trainer type once; later calls return the existing row.
  TrainerRecord ensure_trainer(const std::string& type, const std::string& name);
  TrainerRecord get_trainer(Id id);
  Page<TrainerRecord> list_trainers(const Paging& paging = {});

  ClassifierRecord create_classifier(Id attribute_id, std::optional<std::string> code,
                                     std::optional<std::string> name);
  ClassifierRecord get_classifier(Id id);
  Page<ClassifierRecord> list_classifiers(const Paging& paging = {}, const Filter& filter = {});
  void delete_classifier(Id id);
  /// The checkpoint must belong to one of the classifier's sessions.
  void set_active_checkpoint(Id classifier_id, std::optional<Id> checkpoint_id);

  TrainingSessionRecord create_training_session(Id classifier_id, Id trainer_id, Id set_id,
                                                const std::string& task_id, const std::string& settings);
  TrainingSessionRecord get_training_session(Id id);
  std::vector<TrainingSessionRecord> training_sessions(Id classifier_id);
  std::optional<TrainingSessionRecord> training_session_for_task(const std::string& task_id);

  /// <data_root>/checkpoints/<session_id>/<epoch>/
  std::filesystem::path checkpoint_dir(Id session_id, std::int64_t epoch) const;
  /// Records a checkpoint whose artifact was written to checkpoint_dir().
  /// Throws InvalidArgument for a non-finite score.
  CheckpointRecord record_checkpoint(Id session_id, std::int64_t epoch, double score,
                                     const std::map<std::string, double>& statistics);
  CheckpointRecord get_checkpoint(Id id);
  /// Ordered by creation.
  std::vector<CheckpointRecord> checkpoints(Id session_id);
  /// Highest score, earliest on ties.
  std::optional<CheckpointRecord> best_checkpoint(Id session_id);
  std::filesystem::path checkpoint_path(const CheckpointRecord& checkpoint) const;

  TaskRecord create_task(const std::string& queue, const std::string& payload);
  TaskRecord get_task(const std::string& id);
  /// Atomically moves the oldest PENDING task of the queue to PROGRESS.
  std::optional<TaskRecord> claim_task(const std::string& queue);
  /// PROGRESS to SUCCESS or FAILURE. Throws ConflictError for any other
  /// transition.
  TaskRecord finish_task(const std::string& id, TaskState state, const std::string& result,
                         const std::string& error);
  /// Marks every PROGRESS task FAILURE. Returns how many were changed.
  std::size_t fail_running_tasks(const std::string& error);
  std::vector<TaskRecord> tasks(const std::string& queue, std::optional<TaskState> state = std::nullopt);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace doccat::repo
