#include "doccat/repo/repository.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <mutex>
#include <random>
#include <system_error>
#include <variant>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "doccat/common/random.hpp"
#include "doccat/common/timestamp.hpp"
#include "sqlite.hpp"

namespace doccat::repo {

namespace fs = std::filesystem;

std::string task_state_name(TaskState state) {
  switch (state) {
    case TaskState::pending: return "PENDING";
    case TaskState::progress: return "PROGRESS";
    case TaskState::success: return "SUCCESS";
    case TaskState::failure: return "FAILURE";
  }
  return "UNKNOWN";
}

TaskState parse_task_state(std::string_view name) {
  if (name == "PENDING") return TaskState::pending;
  if (name == "PROGRESS") return TaskState::progress;
  if (name == "SUCCESS") return TaskState::success;
  if (name == "FAILURE") return TaskState::failure;
  throw InvalidArgument("unknown task state '" + std::string(name) + "'");
}

std::string resolve_database(const std::string& database, const fs::path& data_root) {
  if (database.empty()) return (data_root / "repo.db").string();
  if (database == ":memory:") return database;
  constexpr std::string_view scheme = "sqlite:///";
  if (database.starts_with(scheme)) {
    std::string rest = database.substr(scheme.size());
    while (rest.starts_with('/')) rest.erase(0, 1);
    if (rest.empty()) throw InvalidArgument("database url '" + database + "' names no file");
    if (rest == ":memory:") return rest;
    return "/" + rest;
  }
  if (database.find("://") != std::string::npos) {
    throw InvalidArgument("unsupported database '" + database + "'");
  }
  const fs::path p(database);
  return (p.is_absolute() ? p : data_root / p).string();
}

namespace {

constexpr std::string_view kSchema = R"sql(
CREATE TABLE IF NOT EXISTS schemas (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  code TEXT UNIQUE,
  name TEXT,
  created TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS attributes (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  schema_id INTEGER NOT NULL REFERENCES schemas(id) ON DELETE CASCADE,
  code TEXT,
  name TEXT,
  created TEXT NOT NULL,
  UNIQUE (schema_id, code)
);
CREATE TABLE IF NOT EXISTS attribute_values (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  attribute_id INTEGER NOT NULL REFERENCES attributes(id) ON DELETE CASCADE,
  code TEXT NOT NULL,
  name TEXT,
  created TEXT NOT NULL,
  UNIQUE (attribute_id, code)
);
CREATE TABLE IF NOT EXISTS collections (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  code TEXT UNIQUE,
  name TEXT,
  created TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS documents (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  collection_id INTEGER NOT NULL REFERENCES collections(id) ON DELETE CASCADE,
  code TEXT,
  name TEXT,
  path TEXT,
  language TEXT,
  publication_date TEXT,
  abstract TEXT,
  created TEXT NOT NULL,
  UNIQUE (collection_id, code)
);
CREATE TABLE IF NOT EXISTS classification_sets (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  collection_id INTEGER NOT NULL REFERENCES collections(id) ON DELETE CASCADE,
  schema_id INTEGER NOT NULL REFERENCES schemas(id) ON DELETE CASCADE,
  code TEXT UNIQUE,
  name TEXT,
  created TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS labels (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  classification_set_id INTEGER NOT NULL REFERENCES classification_sets(id) ON DELETE CASCADE,
  document_id INTEGER NOT NULL REFERENCES documents(id) ON DELETE CASCADE,
  attribute_value_id INTEGER NOT NULL REFERENCES attribute_values(id) ON DELETE CASCADE,
  created TEXT NOT NULL,
  UNIQUE (classification_set_id, document_id, attribute_value_id)
);
CREATE TABLE IF NOT EXISTS trainers (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  type TEXT NOT NULL UNIQUE,
  name TEXT,
  created TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS classifiers (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  attribute_id INTEGER NOT NULL REFERENCES attributes(id) ON DELETE CASCADE,
  code TEXT UNIQUE,
  name TEXT,
  active_checkpoint_id INTEGER REFERENCES training_checkpoints(id) ON DELETE SET NULL,
  created TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS training_sessions (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  classifier_id INTEGER NOT NULL REFERENCES classifiers(id) ON DELETE CASCADE,
  trainer_id INTEGER NOT NULL REFERENCES trainers(id),
  classification_set_id INTEGER REFERENCES classification_sets(id) ON DELETE SET NULL,
  task_id TEXT NOT NULL UNIQUE,
  settings TEXT NOT NULL,
  created TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS training_checkpoints (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  training_session_id INTEGER NOT NULL REFERENCES training_sessions(id) ON DELETE CASCADE,
  epoch INTEGER NOT NULL,
  name TEXT NOT NULL,
  score REAL NOT NULL,
  statistics TEXT NOT NULL,
  path TEXT NOT NULL,
  created TEXT NOT NULL,
  UNIQUE (training_session_id, epoch)
);
CREATE TABLE IF NOT EXISTS tasks (
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  id TEXT NOT NULL UNIQUE,
  queue TEXT NOT NULL,
  state TEXT NOT NULL,
  payload TEXT NOT NULL,
  result TEXT NOT NULL DEFAULT '',
  error TEXT NOT NULL DEFAULT '',
  created TEXT NOT NULL,
  updated TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS documents_collection ON documents(collection_id);
CREATE INDEX IF NOT EXISTS labels_set_document ON labels(classification_set_id, document_id);
CREATE INDEX IF NOT EXISTS labels_document ON labels(document_id);
CREATE INDEX IF NOT EXISTS labels_value ON labels(attribute_value_id);
CREATE INDEX IF NOT EXISTS sessions_classifier ON training_sessions(classifier_id);
CREATE INDEX IF NOT EXISTS checkpoints_session ON training_checkpoints(training_session_id);
CREATE INDEX IF NOT EXISTS tasks_queue_state ON tasks(queue, state);
)sql";

using Bound = std::variant<std::int64_t, std::string>;

std::string new_task_id() {
  static std::mutex mu;
  static Rng rng(std::random_device{}() ^ (static_cast<std::uint64_t>(std::random_device{}()) << 32));
  std::lock_guard lock(mu);
  return fmt::format("{:016x}{:016x}", rng.next_u64(), rng.next_u64());
}

std::string statistics_json(const std::map<std::string, double>& statistics) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : statistics) j[k] = v;
  return j.dump();
}

std::map<std::string, double> parse_statistics(const std::string& text) {
  std::map<std::string, double> out;
  const auto j = nlohmann::json::parse(text);
  for (const auto& [k, v] : j.items()) out[k] = v.get<double>();
  return out;
}

void write_file_atomically(const fs::path& path, std::string_view text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw StorageError("cannot create " + path.parent_path().string() + ": " + ec.message());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw StorageError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot replace " + path.string() + ": " + ec.message());
}

void remove_quietly(const fs::path& path) {
  std::error_code ec;
  fs::remove_all(path, ec);
}

constexpr std::string_view kDocumentColumns =
    "id, collection_id, code, name, language, publication_date, abstract, path, created";
constexpr std::string_view kCheckpointColumns =
    "id, training_session_id, epoch, name, score, statistics, path, created";
constexpr std::string_view kTaskColumns = "id, queue, state, payload, result, error, created, updated";
constexpr std::string_view kSessionColumns =
    "id, classifier_id, trainer_id, classification_set_id, task_id, settings, created";

SchemaRecord read_schema(const sqlite::Statement& s) {
  return {s.int64(0), s.optional_text(1), s.optional_text(2), s.text(3)};
}

AttributeRecord read_attribute(const sqlite::Statement& s) {
  return {s.int64(0), s.int64(1), s.optional_text(2), s.optional_text(3), s.text(4)};
}

AttributeValueRecord read_value(const sqlite::Statement& s) {
  return {s.int64(0), s.int64(1), s.text(2), s.optional_text(3), s.text(4)};
}

CollectionRecord read_collection(const sqlite::Statement& s) {
  return {s.int64(0), s.optional_text(1), s.optional_text(2), s.text(3)};
}

DocumentRecord read_document(const sqlite::Statement& s) {
  DocumentRecord r;
  r.id = s.int64(0);
  r.collection_id = s.int64(1);
  r.fields = {s.optional_text(2), s.optional_text(3), s.optional_text(4), s.optional_text(5), s.optional_text(6)};
  r.path = s.optional_text(7);
  r.created = s.text(8);
  return r;
}

ClassificationSetRecord read_set(const sqlite::Statement& s) {
  return {s.int64(0), s.int64(1), s.int64(2), s.optional_text(3), s.optional_text(4), s.text(5)};
}

LabelRecord read_label(const sqlite::Statement& s) {
  return {s.int64(0), s.int64(1), s.int64(2), s.int64(3), s.text(4)};
}

TrainerRecord read_trainer(const sqlite::Statement& s) {
  return {s.int64(0), s.text(1), s.optional_text(2), s.text(3)};
}

ClassifierRecord read_classifier(const sqlite::Statement& s) {
  return {s.int64(0), s.int64(1), s.optional_text(2), s.optional_text(3), s.optional_int64(4), s.text(5)};
}

TrainingSessionRecord read_session(const sqlite::Statement& s) {
  return {s.int64(0), s.int64(1), s.int64(2), s.optional_int64(3), s.text(4), s.text(5), s.text(6)};
}

CheckpointRecord read_checkpoint(const sqlite::Statement& s) {
  return {s.int64(0), s.int64(1), s.int64(2), s.text(3), s.real(4), parse_statistics(s.text(5)), s.text(6),
          s.text(7)};
}

TaskRecord read_task(const sqlite::Statement& s) {
  return {s.text(0), s.text(1), parse_task_state(s.text(2)), s.text(3), s.text(4), s.text(5), s.text(6), s.text(7)};
}

}  // namespace

struct Repository::Impl {
  fs::path data_root;
  sqlite::Database db;
  std::recursive_mutex mu;
  int depth = 0;

  Impl(const RepositoryOptions& options)
      : data_root(absolute_root(options.data_root)), db(open(options), options.echo) {
    db.exec("PRAGMA foreign_keys = ON");
    db.exec("PRAGMA journal_mode = WAL");
    db.exec(kSchema);
  }

  static fs::path absolute_root(const fs::path& root) {
    if (root.empty()) throw InvalidArgument("a data root is required");
    return fs::absolute(root);
  }

  static std::string open(const RepositoryOptions& options) {
    std::error_code ec;
    fs::create_directories(options.data_root, ec);
    if (ec) throw StorageError("cannot create data root " + options.data_root.string() + ": " + ec.message());
    const std::string location = resolve_database(options.database, fs::absolute(options.data_root));
    if (location != ":memory:") fs::create_directories(fs::path(location).parent_path(), ec);
    return location;
  }

  void transaction(const std::function<void()>& body) {
    std::lock_guard lock(mu);
    if (depth > 0) {
      body();
      return;
    }
    db.exec("BEGIN IMMEDIATE");
    ++depth;
    try {
      body();
      --depth;
      db.exec("COMMIT");
    } catch (...) {
      depth = 0;
      try {
        db.exec("ROLLBACK");
      } catch (const Error&) {
      }
      throw;
    }
  }

  template <typename Read, typename... Args>
  auto one(std::string_view sql, Read read, const Args&... args) -> std::optional<decltype(read(
      std::declval<const sqlite::Statement&>()))> {
    sqlite::Statement s(db.handle(), sql);
    s.bind_all(args...);
    if (!s.step()) return std::nullopt;
    return read(s);
  }

  template <typename Read, typename... Args>
  auto all(std::string_view sql, Read read, const Args&... args) {
    sqlite::Statement s(db.handle(), sql);
    s.bind_all(args...);
    std::vector<decltype(read(s))> out;
    while (s.step()) out.push_back(read(s));
    return out;
  }

  template <typename Read>
  auto page(std::string_view table, std::string_view columns, std::string where, std::vector<Bound> binds,
            const Paging& paging, const Filter& filter, Read read) {
    if (filter.code) {
      where += where.empty() ? "code = ?" : " AND code = ?";
      binds.emplace_back(*filter.code);
    }
    const std::string clause = where.empty() ? "" : " WHERE " + where;
    auto bind = [&](sqlite::Statement& s) {
      int i = 0;
      for (const auto& b : binds) std::visit([&](const auto& v) { s.bind(++i, v); }, b);
      return i;
    };
    sqlite::Statement count(db.handle(), fmt::format("SELECT COUNT(*) FROM {}{}", table, clause));
    bind(count);
    count.step();
    sqlite::Statement s(db.handle(),
                        fmt::format("SELECT {} FROM {}{} ORDER BY id LIMIT ? OFFSET ?", columns, table, clause));
    const int n = bind(s);
    s.bind(n + 1, paging.limit ? static_cast<std::int64_t>(*paging.limit) : std::int64_t{-1});
    s.bind(n + 2, paging.offset);
    Page<decltype(read(s))> out;
    out.total = static_cast<std::size_t>(count.int64(0));
    while (s.step()) out.items.push_back(read(s));
    return out;
  }

  template <typename T>
  static T found(std::optional<T> value, std::string_view kind, Id id) {
    if (!value) throw NotFoundError(fmt::format("{} {} not found", kind, id));
    return std::move(*value);
  }

  void require(std::string_view table, std::string_view kind, Id id) {
    sqlite::Statement s(db.handle(), fmt::format("SELECT 1 FROM {} WHERE id = ?", table));
    s.bind(1, id);
    if (!s.step()) throw NotFoundError(fmt::format("{} {} not found", kind, id));
  }

  // Session directories whose rows are removed when `where` selects their classifiers.
  std::vector<fs::path> session_dirs(std::string_view classifier_where, Id id) {
    return all(fmt::format("SELECT id FROM training_sessions WHERE classifier_id IN "
                           "(SELECT id FROM classifiers WHERE {})",
                           classifier_where),
               [&](const sqlite::Statement& s) { return data_root / "checkpoints" / std::to_string(s.int64(0)); },
               id);
  }

  SchemaRecord get_schema(Id id) {
    return found(one("SELECT id, code, name, created FROM schemas WHERE id = ?", read_schema, id), "schema", id);
  }

  DocumentRecord get_document(Id id) {
    return found(one(fmt::format("SELECT {} FROM documents WHERE id = ?", kDocumentColumns), read_document, id),
                 "document", id);
  }

  ClassificationSetRecord get_set(Id id) {
    return found(one("SELECT id, collection_id, schema_id, code, name, created FROM classification_sets "
                     "WHERE id = ?",
                     read_set, id),
                 "classification set", id);
  }

  ClassifierRecord get_classifier(Id id) {
    return found(one("SELECT id, attribute_id, code, name, active_checkpoint_id, created FROM classifiers "
                     "WHERE id = ?",
                     read_classifier, id),
                 "classifier", id);
  }

  CheckpointRecord get_checkpoint(Id id) {
    return found(
        one(fmt::format("SELECT {} FROM training_checkpoints WHERE id = ?", kCheckpointColumns), read_checkpoint, id),
        "checkpoint", id);
  }

  TaskRecord get_task(const std::string& id) {
    auto r = one(fmt::format("SELECT {} FROM tasks WHERE id = ?", kTaskColumns), read_task, id);
    if (!r) throw NotFoundError("task '" + id + "' not found");
    return std::move(*r);
  }
};

Repository::Repository(RepositoryOptions options) : impl_(std::make_unique<Impl>(options)) {}

Repository::~Repository() = default;

const fs::path& Repository::data_root() const { return impl_->data_root; }

void Repository::transaction(const std::function<void()>& body) { impl_->transaction(body); }

SchemaRecord Repository::create_schema(const SchemaInput& input) {
  if (input.attributes.empty()) throw InvalidArgument("a schema needs at least one attribute");
  for (const auto& a : input.attributes) {
    if (a.values.empty()) throw InvalidArgument("attribute '" + a.code.value_or("") + "' has no values");
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      if (a.values[i].code.empty()) throw InvalidArgument("attribute value codes must not be empty");
      for (std::size_t j = 0; j < i; ++j) {
        if (a.values[i].code == a.values[j].code) {
          throw ConflictError("duplicate value '" + a.values[i].code + "' in attribute '" + a.code.value_or("") +
                              "'");
        }
      }
    }
  }
  Id id = 0;
  impl_->transaction([&] {
    const std::string created = now_timestamp();
    impl_->db.run("INSERT INTO schemas (code, name, created) VALUES (?, ?, ?)", input.code, input.name, created);
    id = impl_->db.last_insert_id();
    for (const auto& a : input.attributes) {
      impl_->db.run("INSERT INTO attributes (schema_id, code, name, created) VALUES (?, ?, ?, ?)", id, a.code, a.name,
                    created);
      const Id attribute = impl_->db.last_insert_id();
      for (const auto& v : a.values) {
        impl_->db.run("INSERT INTO attribute_values (attribute_id, code, name, created) VALUES (?, ?, ?, ?)",
                      attribute, v.code, v.name, created);
      }
    }
  });
  return get_schema(id);
}

SchemaRecord Repository::get_schema(Id id) {
  std::lock_guard lock(impl_->mu);
  return impl_->get_schema(id);
}

Page<SchemaRecord> Repository::list_schemas(const Paging& paging, const Filter& filter) {
  std::lock_guard lock(impl_->mu);
  return impl_->page("schemas", "id, code, name, created", "", {}, paging, filter, read_schema);
}

void Repository::delete_schema(Id id) {
  std::vector<fs::path> dirs;
  impl_->transaction([&] {
    impl_->require("schemas", "schema", id);
    dirs = impl_->session_dirs("attribute_id IN (SELECT id FROM attributes WHERE schema_id = ?)", id);
    impl_->db.run("DELETE FROM schemas WHERE id = ?", id);
  });
  for (const auto& d : dirs) remove_quietly(d);
}

std::vector<AttributeRecord> Repository::attributes(Id schema_id) {
  std::lock_guard lock(impl_->mu);
  impl_->require("schemas", "schema", schema_id);
  return impl_->all("SELECT id, schema_id, code, name, created FROM attributes WHERE schema_id = ? ORDER BY id",
                    read_attribute, schema_id);
}

AttributeRecord Repository::get_attribute(Id id) {
  std::lock_guard lock(impl_->mu);
  return Impl::found(
      impl_->one("SELECT id, schema_id, code, name, created FROM attributes WHERE id = ?", read_attribute, id),
      "attribute", id);
}

std::vector<AttributeValueRecord> Repository::attribute_values(Id attribute_id) {
  std::lock_guard lock(impl_->mu);
  impl_->require("attributes", "attribute", attribute_id);
  return impl_->all("SELECT id, attribute_id, code, name, created FROM attribute_values WHERE attribute_id = ? "
                    "ORDER BY id",
                    read_value, attribute_id);
}

AttributeValueRecord Repository::get_attribute_value(Id id) {
  std::lock_guard lock(impl_->mu);
  return Impl::found(
      impl_->one("SELECT id, attribute_id, code, name, created FROM attribute_values WHERE id = ?", read_value, id),
      "attribute value", id);
}

CollectionRecord Repository::create_collection(std::optional<std::string> code, std::optional<std::string> name) {
  std::lock_guard lock(impl_->mu);
  impl_->db.run("INSERT INTO collections (code, name, created) VALUES (?, ?, ?)", code, name, now_timestamp());
  return get_collection(impl_->db.last_insert_id());
}

CollectionRecord Repository::get_collection(Id id) {
  std::lock_guard lock(impl_->mu);
  return Impl::found(
      impl_->one("SELECT id, code, name, created FROM collections WHERE id = ?", read_collection, id), "collection",
      id);
}

Page<CollectionRecord> Repository::list_collections(const Paging& paging, const Filter& filter) {
  std::lock_guard lock(impl_->mu);
  return impl_->page("collections", "id, code, name, created", "", {}, paging, filter, read_collection);
}

void Repository::delete_collection(Id id) {
  impl_->transaction([&] {
    impl_->require("collections", "collection", id);
    impl_->db.run("DELETE FROM collections WHERE id = ?", id);
  });
  remove_quietly(impl_->data_root / "documents" / std::to_string(id));
}

DocumentRecord Repository::create_document(Id collection_id, const DocumentFields& f) {
  std::lock_guard lock(impl_->mu);
  impl_->require("collections", "collection", collection_id);
  impl_->db.run("INSERT INTO documents (collection_id, code, name, language, publication_date, abstract, created) "
                "VALUES (?, ?, ?, ?, ?, ?, ?)",
                collection_id, f.code, f.name, f.language, f.publication_date, f.abstract, now_timestamp());
  return impl_->get_document(impl_->db.last_insert_id());
}

DocumentRecord Repository::get_document(Id id) {
  std::lock_guard lock(impl_->mu);
  return impl_->get_document(id);
}

Page<DocumentRecord> Repository::list_documents(Id collection_id, const Paging& paging, const Filter& filter) {
  std::lock_guard lock(impl_->mu);
  impl_->require("collections", "collection", collection_id);
  return impl_->page("documents", kDocumentColumns, "collection_id = ?", {collection_id}, paging, filter,
                     read_document);
}

void Repository::delete_document(Id id) {
  std::optional<std::string> path;
  impl_->transaction([&] {
    path = impl_->get_document(id).path;
    impl_->db.run("DELETE FROM documents WHERE id = ?", id);
  });
  if (path) remove_quietly(impl_->data_root / *path);
}

void Repository::store_document_content(Id document_id, std::string_view text) {
  std::lock_guard lock(impl_->mu);
  const DocumentRecord doc = impl_->get_document(document_id);
  const std::string relative = fmt::format("documents/{}/{}.txt", doc.collection_id, doc.id);
  write_file_atomically(impl_->data_root / relative, text);
  if (doc.path != relative) impl_->db.run("UPDATE documents SET path = ? WHERE id = ?", relative, document_id);
}

std::string Repository::load_document_content(Id document_id) {
  fs::path path;
  {
    std::lock_guard lock(impl_->mu);
    const DocumentRecord doc = impl_->get_document(document_id);
    if (!doc.path) throw NotFoundError(fmt::format("document {} has no content", document_id));
    path = impl_->data_root / *doc.path;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ClassificationSetRecord Repository::create_classification_set(Id collection_id, Id schema_id,
                                                              std::optional<std::string> code,
                                                              std::optional<std::string> name) {
  std::lock_guard lock(impl_->mu);
  impl_->require("collections", "collection", collection_id);
  impl_->require("schemas", "schema", schema_id);
  impl_->db.run("INSERT INTO classification_sets (collection_id, schema_id, code, name, created) "
                "VALUES (?, ?, ?, ?, ?)",
                collection_id, schema_id, code, name, now_timestamp());
  return impl_->get_set(impl_->db.last_insert_id());
}

ClassificationSetRecord Repository::get_classification_set(Id id) {
  std::lock_guard lock(impl_->mu);
  return impl_->get_set(id);
}

Page<ClassificationSetRecord> Repository::list_classification_sets(const Paging& paging, const Filter& filter) {
  std::lock_guard lock(impl_->mu);
  return impl_->page("classification_sets", "id, collection_id, schema_id, code, name, created", "", {}, paging,
                     filter, read_set);
}

void Repository::delete_classification_set(Id id) {
  impl_->transaction([&] {
    impl_->require("classification_sets", "classification set", id);
    impl_->db.run("DELETE FROM classification_sets WHERE id = ?", id);
  });
}

std::vector<LabelRecord> Repository::add_labels(Id set_id, Id document_id, const std::vector<Id>& value_ids) {
  impl_->transaction([&] {
    const ClassificationSetRecord set = impl_->get_set(set_id);
    const DocumentRecord doc = impl_->get_document(document_id);
    if (doc.collection_id != set.collection_id) {
      throw InvalidArgument(fmt::format("document {} is not in collection {}", document_id, set.collection_id));
    }
    const std::string created = now_timestamp();
    for (const Id value : value_ids) {
      const auto schema = impl_->one("SELECT a.schema_id FROM attribute_values v JOIN attributes a "
                                     "ON a.id = v.attribute_id WHERE v.id = ?",
                                     [](const sqlite::Statement& s) { return s.int64(0); }, value);
      if (!schema) throw InvalidArgument(fmt::format("attribute value {} does not exist", value));
      if (*schema != set.schema_id) {
        throw InvalidArgument(fmt::format("attribute value {} is not part of schema {}", value, set.schema_id));
      }
      impl_->db.run("INSERT OR IGNORE INTO labels (classification_set_id, document_id, attribute_value_id, created) "
                    "VALUES (?, ?, ?, ?)",
                    set_id, document_id, value, created);
    }
  });
  return document_labels(set_id, document_id);
}

std::vector<LabelRecord> Repository::labels(Id set_id) {
  std::lock_guard lock(impl_->mu);
  impl_->require("classification_sets", "classification set", set_id);
  return impl_->all("SELECT id, classification_set_id, document_id, attribute_value_id, created FROM labels "
                    "WHERE classification_set_id = ? ORDER BY id",
                    read_label, set_id);
}

std::vector<LabelRecord> Repository::document_labels(Id set_id, Id document_id) {
  std::lock_guard lock(impl_->mu);
  impl_->require("classification_sets", "classification set", set_id);
  impl_->require("documents", "document", document_id);
  return impl_->all("SELECT id, classification_set_id, document_id, attribute_value_id, created FROM labels "
                    "WHERE classification_set_id = ? AND document_id = ? ORDER BY id",
                    read_label, set_id, document_id);
}

std::size_t Repository::delete_document_labels(Id set_id, Id document_id) {
  std::lock_guard lock(impl_->mu);
  impl_->require("classification_sets", "classification set", set_id);
  impl_->require("documents", "document", document_id);
  impl_->db.run("DELETE FROM labels WHERE classification_set_id = ? AND document_id = ?", set_id, document_id);
  return static_cast<std::size_t>(impl_->db.changes());
}

TrainerRecord Repository::ensure_trainer(const std::string& type, const std::string& name) {
  std::lock_guard lock(impl_->mu);
  impl_->db.run("INSERT OR IGNORE INTO trainers (type, name, created) VALUES (?, ?, ?)", type, name, now_timestamp());
  return *impl_->one("SELECT id, type, name, created FROM trainers WHERE type = ?", read_trainer, type);
}

TrainerRecord Repository::get_trainer(Id id) {
  std::lock_guard lock(impl_->mu);
  return Impl::found(impl_->one("SELECT id, type, name, created FROM trainers WHERE id = ?", read_trainer, id),
                     "trainer", id);
}

Page<TrainerRecord> Repository::list_trainers(const Paging& paging) {
  std::lock_guard lock(impl_->mu);
  return impl_->page("trainers", "id, type, name, created", "", {}, paging, {}, read_trainer);
}

ClassifierRecord Repository::create_classifier(Id attribute_id, std::optional<std::string> code,
                                               std::optional<std::string> name) {
  std::lock_guard lock(impl_->mu);
  impl_->require("attributes", "attribute", attribute_id);
  impl_->db.run("INSERT INTO classifiers (attribute_id, code, name, created) VALUES (?, ?, ?, ?)", attribute_id, code,
                name, now_timestamp());
  return impl_->get_classifier(impl_->db.last_insert_id());
}

ClassifierRecord Repository::get_classifier(Id id) {
  std::lock_guard lock(impl_->mu);
  return impl_->get_classifier(id);
}

Page<ClassifierRecord> Repository::list_classifiers(const Paging& paging, const Filter& filter) {
  std::lock_guard lock(impl_->mu);
  return impl_->page("classifiers", "id, attribute_id, code, name, active_checkpoint_id, created", "", {}, paging,
                     filter, read_classifier);
}

void Repository::delete_classifier(Id id) {
  std::vector<fs::path> dirs;
  impl_->transaction([&] {
    impl_->require("classifiers", "classifier", id);
    dirs = impl_->session_dirs("id = ?", id);
    impl_->db.run("DELETE FROM classifiers WHERE id = ?", id);
  });
  for (const auto& d : dirs) remove_quietly(d);
}

void Repository::set_active_checkpoint(Id classifier_id, std::optional<Id> checkpoint_id) {
  impl_->transaction([&] {
    impl_->require("classifiers", "classifier", classifier_id);
    if (checkpoint_id) {
      const CheckpointRecord c = impl_->get_checkpoint(*checkpoint_id);
      const auto owner = impl_->one("SELECT classifier_id FROM training_sessions WHERE id = ?",
                                    [](const sqlite::Statement& s) { return s.int64(0); }, c.training_session_id);
      if (owner != classifier_id) {
        throw InvalidArgument(
            fmt::format("checkpoint {} does not belong to classifier {}", *checkpoint_id, classifier_id));
      }
    }
    impl_->db.run("UPDATE classifiers SET active_checkpoint_id = ? WHERE id = ?", checkpoint_id, classifier_id);
  });
}

TrainingSessionRecord Repository::create_training_session(Id classifier_id, Id trainer_id, Id set_id,
                                                          const std::string& task_id, const std::string& settings) {
  std::lock_guard lock(impl_->mu);
  impl_->require("classifiers", "classifier", classifier_id);
  impl_->require("trainers", "trainer", trainer_id);
  impl_->require("classification_sets", "classification set", set_id);
  impl_->db.run("INSERT INTO training_sessions (classifier_id, trainer_id, classification_set_id, task_id, settings, "
                "created) VALUES (?, ?, ?, ?, ?, ?)",
                classifier_id, trainer_id, set_id, task_id, settings, now_timestamp());
  return get_training_session(impl_->db.last_insert_id());
}

TrainingSessionRecord Repository::get_training_session(Id id) {
  std::lock_guard lock(impl_->mu);
  return Impl::found(
      impl_->one(fmt::format("SELECT {} FROM training_sessions WHERE id = ?", kSessionColumns), read_session, id),
      "training session", id);
}

std::vector<TrainingSessionRecord> Repository::training_sessions(Id classifier_id) {
  std::lock_guard lock(impl_->mu);
  impl_->require("classifiers", "classifier", classifier_id);
  return impl_->all(
      fmt::format("SELECT {} FROM training_sessions WHERE classifier_id = ? ORDER BY id", kSessionColumns),
      read_session, classifier_id);
}

std::optional<TrainingSessionRecord> Repository::training_session_for_task(const std::string& task_id) {
  std::lock_guard lock(impl_->mu);
  return impl_->one(fmt::format("SELECT {} FROM training_sessions WHERE task_id = ?", kSessionColumns), read_session,
                    task_id);
}

fs::path Repository::checkpoint_dir(Id session_id, std::int64_t epoch) const {
  return impl_->data_root / "checkpoints" / std::to_string(session_id) / std::to_string(epoch);
}

CheckpointRecord Repository::record_checkpoint(Id session_id, std::int64_t epoch, double score,
                                               const std::map<std::string, double>& statistics) {
  if (!std::isfinite(score)) throw InvalidArgument("checkpoint score must be finite");
  for (const auto& [key, value] : statistics) {
    if (!std::isfinite(value)) throw InvalidArgument("statistic '" + key + "' must be finite");
  }
  std::lock_guard lock(impl_->mu);
  impl_->require("training_sessions", "training session", session_id);
  impl_->db.run("INSERT INTO training_checkpoints (training_session_id, epoch, name, score, statistics, path, created) "
                "VALUES (?, ?, ?, ?, ?, ?, ?)",
                session_id, epoch, fmt::format("Checkpoint {}", epoch), score, statistics_json(statistics),
                fmt::format("checkpoints/{}/{}", session_id, epoch), now_timestamp());
  return impl_->get_checkpoint(impl_->db.last_insert_id());
}

CheckpointRecord Repository::get_checkpoint(Id id) {
  std::lock_guard lock(impl_->mu);
  return impl_->get_checkpoint(id);
}

std::vector<CheckpointRecord> Repository::checkpoints(Id session_id) {
  std::lock_guard lock(impl_->mu);
  impl_->require("training_sessions", "training session", session_id);
  return impl_->all(fmt::format("SELECT {} FROM training_checkpoints WHERE training_session_id = ? "
                                "ORDER BY created, id",
                                kCheckpointColumns),
                    read_checkpoint, session_id);
}

std::optional<CheckpointRecord> Repository::best_checkpoint(Id session_id) {
  std::lock_guard lock(impl_->mu);
  impl_->require("training_sessions", "training session", session_id);
  return impl_->one(fmt::format("SELECT {} FROM training_checkpoints WHERE training_session_id = ? "
                                "ORDER BY score DESC, created, id LIMIT 1",
                                kCheckpointColumns),
                    read_checkpoint, session_id);
}

fs::path Repository::checkpoint_path(const CheckpointRecord& checkpoint) const {
  return impl_->data_root / checkpoint.path;
}

TaskRecord Repository::create_task(const std::string& queue, const std::string& payload) {
  std::lock_guard lock(impl_->mu);
  const std::string id = new_task_id();
  const std::string created = now_timestamp();
  impl_->db.run("INSERT INTO tasks (id, queue, state, payload, created, updated) VALUES (?, ?, ?, ?, ?, ?)", id, queue,
                task_state_name(TaskState::pending), payload, created, created);
  return impl_->get_task(id);
}

TaskRecord Repository::get_task(const std::string& id) {
  std::lock_guard lock(impl_->mu);
  return impl_->get_task(id);
}

std::optional<TaskRecord> Repository::claim_task(const std::string& queue) {
  std::optional<TaskRecord> claimed;
  impl_->transaction([&] {
    const auto id = impl_->one("SELECT id FROM tasks WHERE queue = ? AND state = 'PENDING' ORDER BY seq LIMIT 1",
                               [](const sqlite::Statement& s) { return s.text(0); }, queue);
    if (!id) return;
    impl_->db.run("UPDATE tasks SET state = 'PROGRESS', updated = ? WHERE id = ? AND state = 'PENDING'",
                  now_timestamp(), *id);
    if (impl_->db.changes() == 1) claimed = impl_->get_task(*id);
  });
  return claimed;
}

TaskRecord Repository::finish_task(const std::string& id, TaskState state, const std::string& result,
                                   const std::string& error) {
  if (!is_terminal(state)) throw InvalidArgument("a task can only finish as SUCCESS or FAILURE");
  std::lock_guard lock(impl_->mu);
  impl_->db.run("UPDATE tasks SET state = ?, result = ?, error = ?, updated = ? WHERE id = ? AND state = 'PROGRESS'",
                task_state_name(state), result, error, now_timestamp(), id);
  if (impl_->db.changes() != 1) {
    const TaskRecord current = impl_->get_task(id);
    throw ConflictError("task '" + id + "' cannot move from " + task_state_name(current.state) + " to " +
                        task_state_name(state));
  }
  return impl_->get_task(id);
}

std::size_t Repository::fail_running_tasks(const std::string& error) {
  std::lock_guard lock(impl_->mu);
  impl_->db.run("UPDATE tasks SET state = 'FAILURE', error = ?, updated = ? WHERE state = 'PROGRESS'", error,
                now_timestamp());
  return static_cast<std::size_t>(impl_->db.changes());
}

std::vector<TaskRecord> Repository::tasks(const std::string& queue, std::optional<TaskState> state) {
  std::lock_guard lock(impl_->mu);
  if (state) {
    return impl_->all(fmt::format("SELECT {} FROM tasks WHERE queue = ? AND state = ? ORDER BY seq", kTaskColumns),
                      read_task, queue, task_state_name(*state));
  }
  return impl_->all(fmt::format("SELECT {} FROM tasks WHERE queue = ? ORDER BY seq", kTaskColumns), read_task, queue);
}

}  // namespace doccat::repo
