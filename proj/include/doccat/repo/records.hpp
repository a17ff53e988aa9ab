#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace doccat::repo {

using Id = std::int64_t;

struct Paging {
  std::size_t offset = 0;
  std::optional<std::size_t> limit;
};

struct Filter {
  std::optional<std::string> code;
};

template <typename T>
struct Page {
  std::vector<T> items;
  std::size_t total = 0;  // matching rows before paging
};

struct SchemaRecord {
  Id id = 0;
  std::optional<std::string> code;
  std::optional<std::string> name;
  std::string created;

  friend bool operator==(const SchemaRecord&, const SchemaRecord&) = default;
};

struct AttributeRecord {
  Id id = 0;
  Id schema_id = 0;
  std::optional<std::string> code;
  std::optional<std::string> name;
  std::string created;

  friend bool operator==(const AttributeRecord&, const AttributeRecord&) = default;
};

struct AttributeValueRecord {
  Id id = 0;
  Id attribute_id = 0;
  std::string code;
  std::optional<std::string> name;
  std::string created;

  friend bool operator==(const AttributeValueRecord&, const AttributeValueRecord&) = default;
};

struct CollectionRecord {
  Id id = 0;
  std::optional<std::string> code;
  std::optional<std::string> name;
  std::string created;

  friend bool operator==(const CollectionRecord&, const CollectionRecord&) = default;
};

struct DocumentFields {
  std::optional<std::string> code;
  std::optional<std::string> name;
  std::optional<std::string> language;
  std::optional<std::string> publication_date;
  std::optional<std::string> abstract;

  friend bool operator==(const DocumentFields&, const DocumentFields&) = default;
};

struct DocumentRecord {
  Id id = 0;
  Id collection_id = 0;
  DocumentFields fields;
  std::optional<std::string> path;  // relative to the data root, set once content is stored
  std::string created;

  friend bool operator==(const DocumentRecord&, const DocumentRecord&) = default;
};

struct ClassificationSetRecord {
  Id id = 0;
  Id collection_id = 0;
  Id schema_id = 0;
  std::optional<std::string> code;
  std::optional<std::string> name;
  std::string created;

  friend bool operator==(const ClassificationSetRecord&, const ClassificationSetRecord&) = default;
};

struct LabelRecord {
  Id id = 0;
  Id classification_set_id = 0;
  Id document_id = 0;
  Id attribute_value_id = 0;
  std::string created;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

struct TrainerRecord {
  Id id = 0;
  std::string type;  // registry key
  std::optional<std::string> name;
  std::string created;

  friend bool operator==(const TrainerRecord&, const TrainerRecord&) = default;
};

struct ClassifierRecord {
  Id id = 0;
  Id attribute_id = 0;
  std::optional<std::string> code;
  std::optional<std::string> name;
  std::optional<Id> active_checkpoint_id;
  std::string created;

  friend bool operator==(const ClassifierRecord&, const ClassifierRecord&) = default;
};

struct TrainingSessionRecord {
  Id id = 0;
  Id classifier_id = 0;
  Id trainer_id = 0;
  std::optional<Id> classification_set_id;  // cleared when the set is deleted
  std::string task_id;
  std::string settings;  // JSON
  std::string created;

  friend bool operator==(const TrainingSessionRecord&, const TrainingSessionRecord&) = default;
};

struct CheckpointRecord {
  Id id = 0;
  Id training_session_id = 0;
  std::int64_t epoch = 0;
  std::string name;
  double score = 0;
  std::map<std::string, double> statistics;
  std::string path;  // relative to the data root
  std::string created;

  friend bool operator==(const CheckpointRecord&, const CheckpointRecord&) = default;
};

enum class TaskState { pending, progress, success, failure };

std::string task_state_name(TaskState state);
/// Throws InvalidArgument for an unknown name.
TaskState parse_task_state(std::string_view name);

inline bool is_terminal(TaskState state) { return state == TaskState::success || state == TaskState::failure; }

struct TaskRecord {
  std::string id;
  std::string queue;
  TaskState state = TaskState::pending;
  std::string payload;  // JSON
  std::string result;   // JSON, empty until SUCCESS
  std::string error;    // set on FAILURE
  std::string created;
  std::string updated;

  friend bool operator==(const TaskRecord&, const TaskRecord&) = default;
};

}  // namespace doccat::repo
