#include "doccat/repo/repository.hpp"

#include <gtest/gtest.h>
#include <sqlite3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include "doccat/common/error.hpp"
#include "doccat/common/random.hpp"
#include "support/temp_dir.hpp"

namespace doccat::repo {
namespace {

SchemaInput category_schema(std::string code = "Schema1") {
  return {code,
          "My schema",
          {{"category", "Category", {{"physics", {}}, {"math", {}}, {"biology", {}}}},
           {"type", "Type", {{"book", {}}, {"article", {}}, {"thesis", {}}}}}};
}

class RepositoryTest : public ::testing::Test {
 protected:
  doccat::testing::TempDir dir;
  std::unique_ptr<Repository> repo = open();

  std::unique_ptr<Repository> open() { return std::make_unique<Repository>(RepositoryOptions{dir.path()}); }
};

TEST_F(RepositoryTest, FirstCollectionGetsIdOne) {
  const auto c = repo->create_collection("Collection1", "My collection");
  EXPECT_EQ(c.id, 1);
  EXPECT_EQ(c.code, "Collection1");
  EXPECT_EQ(c.name, "My collection");
  EXPECT_EQ(c.created.size(), 26u);
  EXPECT_EQ(repo->get_collection(1), c);
}

TEST_F(RepositoryTest, DuplicateCollectionCodeConflicts) {
  repo->create_collection("Collection1", "a");
  EXPECT_THROW(repo->create_collection("Collection1", "b"), ConflictError);
  repo->create_collection(std::nullopt, "no code");
  EXPECT_NO_THROW(repo->create_collection(std::nullopt, "no code either"));
}

TEST_F(RepositoryTest, PagingOffsetAndLimit) {
  for (int i = 0; i < 3; ++i) repo->create_collection("c" + std::to_string(i), std::nullopt);
  const auto page = repo->list_collections({.offset = 1, .limit = 1});
  ASSERT_EQ(page.items.size(), 1u);
  EXPECT_EQ(page.items[0].id, 2);
  EXPECT_EQ(page.total, 3u);
}

TEST_F(RepositoryTest, PagesCoverListExactlyOnce) {
  for (int i = 0; i < 17; ++i) repo->create_collection("c" + std::to_string(i), std::nullopt);
  for (std::size_t limit : {1u, 3u, 5u, 17u, 20u}) {
    std::vector<Id> ids;
    for (std::size_t offset = 0;; offset += limit) {
      const auto page = repo->list_collections({offset, limit});
      if (page.items.empty()) break;
      for (const auto& c : page.items) ids.push_back(c.id);
    }
    ASSERT_EQ(ids.size(), 17u) << limit;
    EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
    EXPECT_EQ(std::set<Id>(ids.begin(), ids.end()).size(), 17u);
  }
}

TEST_F(RepositoryTest, CodeFilterMatchesIdLookup) {
  repo->create_collection("a", "first");
  const auto b = repo->create_collection("b", "second");
  const auto page = repo->list_collections({}, {.code = "b"});
  ASSERT_EQ(page.items.size(), 1u);
  EXPECT_EQ(page.items[0], repo->get_collection(b.id));
  EXPECT_TRUE(repo->list_collections({}, {.code = "zzz"}).items.empty());
}

TEST_F(RepositoryTest, UnknownIdsAreNotFound) {
  EXPECT_THROW(repo->get_collection(9), NotFoundError);
  EXPECT_THROW(repo->get_document(9), NotFoundError);
  EXPECT_THROW(repo->get_schema(9), NotFoundError);
  EXPECT_THROW(repo->get_classifier(9), NotFoundError);
  EXPECT_THROW(repo->get_checkpoint(9), NotFoundError);
  EXPECT_THROW(repo->get_task("nope"), NotFoundError);
  EXPECT_THROW(repo->delete_collection(9), NotFoundError);
  EXPECT_THROW(repo->create_document(9, {}), NotFoundError);
}

TEST_F(RepositoryTest, DocumentCodeUniqueWithinCollection) {
  const auto a = repo->create_collection("a", std::nullopt);
  const auto b = repo->create_collection("b", std::nullopt);
  repo->create_document(a.id, {.code = "doc123"});
  EXPECT_THROW(repo->create_document(a.id, {.code = "doc123"}), ConflictError);
  EXPECT_NO_THROW(repo->create_document(b.id, {.code = "doc123"}));
  const auto page = repo->list_documents(b.id, {}, {.code = "doc123"});
  ASSERT_EQ(page.items.size(), 1u);
  EXPECT_EQ(page.items[0].collection_id, b.id);
}

TEST_F(RepositoryTest, DocumentFieldsRoundTrip) {
  const auto c = repo->create_collection("a", std::nullopt);
  const DocumentFields f{"d1", "Title", "en", "2016-05-31", "An abstract"};
  const auto d = repo->create_document(c.id, f);
  EXPECT_EQ(d.fields, f);
  EXPECT_FALSE(d.path);
  EXPECT_EQ(repo->get_document(d.id), d);
}

TEST_F(RepositoryTest, ContentRoundTripAndOverwrite) {
  const auto c = repo->create_collection("a", std::nullopt);
  const auto d = repo->create_document(c.id, {});
  EXPECT_THROW(repo->load_document_content(d.id), NotFoundError);
  repo->store_document_content(d.id, "abc");
  EXPECT_EQ(repo->load_document_content(d.id), "abc");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "documents" / std::to_string(c.id) / (std::to_string(d.id) + ".txt")));
  EXPECT_EQ(repo->get_document(d.id).path, "documents/1/1.txt");
  repo->store_document_content(d.id, "replaced \xc3\xa9");
  EXPECT_EQ(repo->load_document_content(d.id), "replaced \xc3\xa9");
  EXPECT_THROW(repo->store_document_content(42, "x"), NotFoundError);
}

TEST_F(RepositoryTest, LargeContentIsByteIdentical) {
  const auto c = repo->create_collection("a", std::nullopt);
  const auto d = repo->create_document(c.id, {});
  std::string text(10 * 1024 * 1024, '\0');
  Rng rng(3);
  for (auto& ch : text) ch = static_cast<char>(rng.uniform_index(256));
  repo->store_document_content(d.id, text);
  EXPECT_EQ(repo->load_document_content(d.id), text);
}

TEST_F(RepositoryTest, SchemaTreeGetsIds) {
  const auto s = repo->create_schema(category_schema());
  const auto attrs = repo->attributes(s.id);
  ASSERT_EQ(attrs.size(), 2u);
  EXPECT_EQ(attrs[0].code, "category");
  EXPECT_EQ(attrs[1].name, "Type");
  std::set<Id> value_ids;
  for (const auto& a : attrs) {
    const auto values = repo->attribute_values(a.id);
    ASSERT_EQ(values.size(), 3u);
    for (const auto& v : values) {
      EXPECT_EQ(v.attribute_id, a.id);
      value_ids.insert(v.id);
    }
  }
  EXPECT_EQ(value_ids.size(), 6u);
  EXPECT_EQ(repo->attribute_values(attrs[0].id)[1].code, "math");
}

TEST_F(RepositoryTest, SchemaValidation) {
  EXPECT_THROW(repo->create_schema({"s", "s", {}}), InvalidArgument);
  EXPECT_THROW(repo->create_schema({"s", "s", {{"a", "a", {{"x", {}}, {"x", {}}}}}}), ConflictError);
  repo->create_schema(category_schema());
  EXPECT_THROW(repo->create_schema(category_schema()), ConflictError);
  EXPECT_EQ(repo->list_schemas().total, 1u);
  EXPECT_THROW(repo->create_schema({"t", "t", {{"a", "a", {{"x", {}}}}, {"a", "b", {{"y", {}}}}}}), ConflictError);
  EXPECT_EQ(repo->list_schemas().total, 1u);
}

struct Fixture {
  CollectionRecord collection;
  std::vector<DocumentRecord> docs;
  SchemaRecord schema;
  AttributeRecord category;
  std::vector<AttributeValueRecord> values;
  ClassificationSetRecord set;
};

Fixture populate(Repository& repo) {
  Fixture f;
  f.collection = repo.create_collection("col", "Collection");
  for (int i = 0; i < 4; ++i) {
    f.docs.push_back(repo.create_document(f.collection.id, {.code = "d" + std::to_string(i)}));
    repo.store_document_content(f.docs.back().id, "text " + std::to_string(i));
  }
  f.schema = repo.create_schema(category_schema());
  f.category = repo.attributes(f.schema.id)[0];
  f.values = repo.attribute_values(f.category.id);
  f.set = repo.create_classification_set(f.collection.id, f.schema.id, "Set1", "My classification set");
  return f;
}

TEST_F(RepositoryTest, LabelsRespectCollectionAndSchema) {
  const auto f = populate(*repo);
  const auto added = repo->add_labels(f.set.id, f.docs[0].id, {f.values[0].id, f.values[2].id, f.values[0].id});
  ASSERT_EQ(added.size(), 2u);
  EXPECT_EQ(added[0].attribute_value_id, f.values[0].id);
  EXPECT_TRUE(repo->document_labels(f.set.id, f.docs[1].id).empty());

  const auto other = repo->create_collection("other", std::nullopt);
  const auto stranger = repo->create_document(other.id, {});
  EXPECT_THROW(repo->add_labels(f.set.id, stranger.id, {f.values[0].id}), InvalidArgument);

  const auto other_schema = repo->create_schema(category_schema("Schema2"));
  const auto foreign = repo->attribute_values(repo->attributes(other_schema.id)[0].id)[0];
  EXPECT_THROW(repo->add_labels(f.set.id, f.docs[1].id, {f.values[1].id, foreign.id}), InvalidArgument);
  EXPECT_TRUE(repo->document_labels(f.set.id, f.docs[1].id).empty());
  EXPECT_THROW(repo->add_labels(f.set.id, f.docs[1].id, {9999}), InvalidArgument);

  EXPECT_EQ(repo->delete_document_labels(f.set.id, f.docs[0].id), 2u);
  EXPECT_TRUE(repo->labels(f.set.id).empty());
}

TEST_F(RepositoryTest, ClassificationSetNeedsParents) {
  const auto f = populate(*repo);
  EXPECT_THROW(repo->create_classification_set(99, f.schema.id, "x", "x"), NotFoundError);
  EXPECT_THROW(repo->create_classification_set(f.collection.id, 99, "x", "x"), NotFoundError);
  EXPECT_THROW(repo->create_classification_set(f.collection.id, f.schema.id, "Set1", "dup"), ConflictError);
}

TEST_F(RepositoryTest, DeletingCollectionCascades) {
  const auto f = populate(*repo);
  repo->add_labels(f.set.id, f.docs[0].id, {f.values[0].id});
  const auto content_dir = dir.path() / "documents" / std::to_string(f.collection.id);
  ASSERT_TRUE(std::filesystem::exists(content_dir));
  repo->delete_collection(f.collection.id);
  EXPECT_THROW(repo->get_document(f.docs[0].id), NotFoundError);
  EXPECT_THROW(repo->get_classification_set(f.set.id), NotFoundError);
  EXPECT_FALSE(std::filesystem::exists(content_dir));
  EXPECT_NO_THROW(repo->get_schema(f.schema.id));
}

TEST_F(RepositoryTest, DeletingDocumentRemovesLabelsAndFile) {
  const auto f = populate(*repo);
  repo->add_labels(f.set.id, f.docs[0].id, {f.values[0].id});
  repo->add_labels(f.set.id, f.docs[1].id, {f.values[1].id});
  const auto path = dir.path() / *repo->get_document(f.docs[0].id).path;
  repo->delete_document(f.docs[0].id);
  EXPECT_FALSE(std::filesystem::exists(path));
  const auto remaining = repo->labels(f.set.id);
  ASSERT_EQ(remaining.size(), 1u);
  EXPECT_EQ(remaining[0].document_id, f.docs[1].id);
}

struct Trained {
  ClassifierRecord classifier;
  TrainerRecord trainer;
  TrainingSessionRecord session;
};

Trained with_session(Repository& repo, const Fixture& f, const std::string& task = "task-1") {
  Trained t;
  t.classifier = repo.create_classifier(f.category.id, "Classifier1", "My classifier");
  t.trainer = repo.ensure_trainer("cnn", "Convolutional neural network");
  t.session = repo.create_training_session(t.classifier.id, t.trainer.id, f.set.id, task, "{}");
  return t;
}

TEST_F(RepositoryTest, TrainersAreRegisteredOnce) {
  const auto a = repo->ensure_trainer("cnn", "CNN");
  const auto b = repo->ensure_trainer("svm", "SVM");
  EXPECT_EQ(repo->ensure_trainer("cnn", "other name"), a);
  const auto page = repo->list_trainers();
  ASSERT_EQ(page.items.size(), 2u);
  EXPECT_EQ(page.items[1], b);
  EXPECT_EQ(repo->get_trainer(a.id).type, "cnn");
}

TEST_F(RepositoryTest, CheckpointsOrderedAndBest) {
  const auto f = populate(*repo);
  const auto t = with_session(*repo, f);
  std::vector<Id> ids;
  for (const auto& [epoch, score] : std::vector<std::pair<int, double>>{{0, 0.5}, {1, 0.7}, {2, 0.6}}) {
    const auto c = repo->record_checkpoint(t.session.id, epoch, score, {{"loss", 1.0 / (epoch + 1)}});
    EXPECT_EQ(c.name, "Checkpoint " + std::to_string(epoch));
    EXPECT_EQ(repo->checkpoint_path(c), repo->checkpoint_dir(t.session.id, epoch));
    ids.push_back(c.id);
  }
  const auto listed = repo->checkpoints(t.session.id);
  ASSERT_EQ(listed.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(listed[i].id, ids[i]);
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  EXPECT_DOUBLE_EQ(listed[2].statistics.at("loss"), 1.0 / 3);
  const auto best = repo->best_checkpoint(t.session.id);
  ASSERT_TRUE(best);
  EXPECT_EQ(best->id, ids[1]);
  EXPECT_DOUBLE_EQ(best->score, 0.7);
}

TEST_F(RepositoryTest, CheckpointRejectsNonFiniteScore) {
  const auto f = populate(*repo);
  const auto t = with_session(*repo, f);
  EXPECT_THROW(repo->record_checkpoint(t.session.id, 0, std::nan(""), {}), InvalidArgument);
  EXPECT_THROW(repo->record_checkpoint(t.session.id, 0, 0.5, {{"loss", std::numeric_limits<double>::infinity()}}),
               InvalidArgument);
  EXPECT_THROW(repo->record_checkpoint(999, 0, 0.5, {}), NotFoundError);
  EXPECT_TRUE(repo->checkpoints(t.session.id).empty());
  EXPECT_FALSE(repo->best_checkpoint(t.session.id));
}

TEST_F(RepositoryTest, ActiveCheckpointMustBelongToClassifier) {
  const auto f = populate(*repo);
  const auto t = with_session(*repo, f);
  const auto c = repo->record_checkpoint(t.session.id, 0, 0.5, {});
  const auto other = repo->create_classifier(f.category.id, "Other", std::nullopt);
  EXPECT_THROW(repo->set_active_checkpoint(other.id, c.id), InvalidArgument);
  repo->set_active_checkpoint(t.classifier.id, c.id);
  EXPECT_EQ(repo->get_classifier(t.classifier.id).active_checkpoint_id, c.id);
  repo->set_active_checkpoint(t.classifier.id, std::nullopt);
  EXPECT_FALSE(repo->get_classifier(t.classifier.id).active_checkpoint_id);
}

TEST_F(RepositoryTest, DeletingClassifierRemovesSessionsAndArtifacts) {
  const auto f = populate(*repo);
  const auto t = with_session(*repo, f);
  const auto artifact = repo->checkpoint_dir(t.session.id, 0);
  std::filesystem::create_directories(artifact);
  const auto c = repo->record_checkpoint(t.session.id, 0, 0.5, {});
  repo->set_active_checkpoint(t.classifier.id, c.id);
  repo->delete_classifier(t.classifier.id);
  EXPECT_THROW(repo->get_training_session(t.session.id), NotFoundError);
  EXPECT_THROW(repo->get_checkpoint(c.id), NotFoundError);
  EXPECT_FALSE(std::filesystem::exists(artifact.parent_path()));
}

TEST_F(RepositoryTest, DeletingSchemaCascadesToClassifiers) {
  const auto f = populate(*repo);
  const auto t = with_session(*repo, f);
  repo->add_labels(f.set.id, f.docs[0].id, {f.values[0].id});
  repo->delete_schema(f.schema.id);
  EXPECT_THROW(repo->get_classifier(t.classifier.id), NotFoundError);
  EXPECT_THROW(repo->get_classification_set(f.set.id), NotFoundError);
  EXPECT_THROW(repo->get_attribute_value(f.values[0].id), NotFoundError);
  EXPECT_NO_THROW(repo->get_document(f.docs[0].id));
}

TEST_F(RepositoryTest, DeletingSetKeepsSessions) {
  const auto f = populate(*repo);
  const auto t = with_session(*repo, f);
  repo->delete_classification_set(f.set.id);
  EXPECT_FALSE(repo->get_training_session(t.session.id).classification_set_id);
}

TEST_F(RepositoryTest, TaskStateMachine) {
  const auto a = repo->create_task("training", R"({"n":1})");
  const auto b = repo->create_task("training", R"({"n":2})");
  repo->create_task("classification", "{}");
  EXPECT_EQ(a.state, TaskState::pending);
  EXPECT_NE(a.id, b.id);
  EXPECT_THROW(repo->finish_task(a.id, TaskState::success, "{}", ""), ConflictError);

  const auto claimed = repo->claim_task("training");
  ASSERT_TRUE(claimed);
  EXPECT_EQ(claimed->id, a.id);
  EXPECT_EQ(claimed->state, TaskState::progress);
  EXPECT_EQ(claimed->payload, R"({"n":1})");
  const auto done = repo->finish_task(a.id, TaskState::success, R"({"ok":true})", "");
  EXPECT_EQ(done.state, TaskState::success);
  EXPECT_EQ(done.result, R"({"ok":true})");
  EXPECT_THROW(repo->finish_task(a.id, TaskState::failure, "", "late"), ConflictError);
  EXPECT_THROW(repo->finish_task(a.id, TaskState::progress, "", ""), InvalidArgument);

  EXPECT_EQ(repo->claim_task("training")->id, b.id);
  EXPECT_FALSE(repo->claim_task("training"));
  EXPECT_EQ(repo->fail_running_tasks("worker restarted"), 1u);
  const auto failed = repo->get_task(b.id);
  EXPECT_EQ(failed.state, TaskState::failure);
  EXPECT_EQ(failed.error, "worker restarted");
  EXPECT_EQ(repo->tasks("classification", TaskState::pending).size(), 1u);
}

TEST_F(RepositoryTest, ConcurrentClaimsNeverShareTasks) {
  constexpr int kTasks = 60;
  for (int i = 0; i < kTasks; ++i) repo->create_task("q", "{}");
  std::vector<std::vector<std::string>> got(4);
  std::vector<std::thread> threads;
  for (auto& g : got) {
    threads.emplace_back([&] {
      while (auto t = repo->claim_task("q")) g.push_back(t->id);
    });
  }
  for (auto& t : threads) t.join();
  std::set<std::string> all;
  std::size_t count = 0;
  for (const auto& g : got) {
    all.insert(g.begin(), g.end());
    count += g.size();
  }
  EXPECT_EQ(count, static_cast<std::size_t>(kTasks));
  EXPECT_EQ(all.size(), static_cast<std::size_t>(kTasks));
}

TEST_F(RepositoryTest, TransactionRollsBack) {
  EXPECT_THROW(repo->transaction([&] {
    repo->create_collection("a", std::nullopt);
    repo->create_collection("a", std::nullopt);
  }),
               ConflictError);
  EXPECT_EQ(repo->list_collections().total, 0u);
  repo->transaction([&] {
    repo->create_collection("a", std::nullopt);
    repo->transaction([&] { repo->create_collection("b", std::nullopt); });
  });
  EXPECT_EQ(repo->list_collections().total, 2u);
}

TEST_F(RepositoryTest, ReopenPreservesRecordsAndContent) {
  const auto f = populate(*repo);
  const auto t = with_session(*repo, f);
  repo->add_labels(f.set.id, f.docs[2].id, {f.values[1].id});
  const auto c = repo->record_checkpoint(t.session.id, 0, 0.25, {{"loss", 0.426}, {"f1_macro", 0.7}});
  repo->set_active_checkpoint(t.classifier.id, c.id);
  const auto task = repo->create_task("training", "{}");

  const auto docs = repo->list_documents(f.collection.id).items;
  const auto labels = repo->labels(f.set.id);
  const auto classifier = repo->get_classifier(t.classifier.id);
  repo.reset();
  repo = open();

  EXPECT_EQ(repo->get_collection(f.collection.id), f.collection);
  EXPECT_EQ(repo->list_documents(f.collection.id).items, docs);
  for (std::size_t i = 0; i < f.docs.size(); ++i) {
    EXPECT_EQ(repo->load_document_content(f.docs[i].id), "text " + std::to_string(i));
  }
  EXPECT_EQ(repo->get_schema(f.schema.id), f.schema);
  EXPECT_EQ(repo->attribute_values(f.category.id), f.values);
  EXPECT_EQ(repo->get_classification_set(f.set.id), f.set);
  EXPECT_EQ(repo->labels(f.set.id), labels);
  EXPECT_EQ(repo->get_classifier(t.classifier.id), classifier);
  EXPECT_EQ(repo->get_training_session(t.session.id), t.session);
  EXPECT_EQ(repo->get_checkpoint(c.id), c);
  EXPECT_EQ(repo->get_task(task.id), task);
  EXPECT_EQ(repo->get_trainer(t.trainer.id), t.trainer);
}

TEST_F(RepositoryTest, RandomOperationsKeepReferentialIntegrity) {
  Rng rng(11);
  std::vector<Id> collections, documents, schemas, sets, classifiers, sessions;
  auto pick = [&](std::vector<Id>& ids) { return ids[rng.uniform_index(ids.size())]; };
  auto erase = [](std::vector<Id>& ids, Id id) { ids.erase(std::remove(ids.begin(), ids.end(), id), ids.end()); };
  const auto trainer = repo->ensure_trainer("svm", "SVM");
  int tasks = 0;
  for (int step = 0; step < 400; ++step) {
    try {
      switch (rng.uniform_index(10)) {
        case 0: collections.push_back(repo->create_collection(std::nullopt, std::nullopt).id); break;
        case 1:
          if (!collections.empty()) documents.push_back(repo->create_document(pick(collections), {}).id);
          break;
        case 2:
          schemas.push_back(repo->create_schema({std::nullopt, std::nullopt, {{"a", std::nullopt, {{"x", {}}, {"y", {}}}}}}).id);
          break;
        case 3:
          if (!collections.empty() && !schemas.empty()) {
            sets.push_back(repo->create_classification_set(pick(collections), pick(schemas), std::nullopt, std::nullopt).id);
          }
          break;
        case 4:
          if (!sets.empty() && !documents.empty()) {
            const auto set = repo->get_classification_set(pick(sets));
            const auto attr = repo->attributes(set.schema_id)[0];
            repo->add_labels(set.id, pick(documents), {repo->attribute_values(attr.id)[rng.uniform_index(2)].id});
          }
          break;
        case 5:
          if (!schemas.empty()) {
            const auto attr = repo->attributes(pick(schemas))[0];
            classifiers.push_back(repo->create_classifier(attr.id, std::nullopt, std::nullopt).id);
          }
          break;
        case 6:
          if (!classifiers.empty() && !sets.empty()) {
            const auto s = repo->create_training_session(pick(classifiers), trainer.id, pick(sets),
                                                         "t" + std::to_string(tasks++), "{}");
            sessions.push_back(s.id);
            const auto c = repo->record_checkpoint(s.id, 0, rng.uniform(), {});
            repo->set_active_checkpoint(s.classifier_id, c.id);
          }
          break;
        case 7:
          if (!collections.empty() && rng.uniform() < 0.3) {
            const Id id = pick(collections);
            repo->delete_collection(id);
            erase(collections, id);
          }
          break;
        case 8:
          if (!schemas.empty() && rng.uniform() < 0.3) {
            const Id id = pick(schemas);
            repo->delete_schema(id);
            erase(schemas, id);
          }
          break;
        case 9:
          if (!classifiers.empty() && rng.uniform() < 0.3) {
            const Id id = pick(classifiers);
            repo->delete_classifier(id);
            erase(classifiers, id);
          }
          break;
      }
    } catch (const InvalidArgument&) {
      // Cross-collection label, rejected as it should be.
    } catch (const NotFoundError&) {
      // The picked id was removed by an earlier cascade.
      auto prune = [&](std::vector<Id>& ids, auto get) {
        ids.erase(std::remove_if(ids.begin(), ids.end(),
                                 [&](Id id) {
                                   try {
                                     get(id);
                                     return false;
                                   } catch (const NotFoundError&) {
                                     return true;
                                   }
                                 }),
                  ids.end());
      };
      prune(documents, [&](Id id) { repo->get_document(id); });
      prune(sets, [&](Id id) { repo->get_classification_set(id); });
      prune(classifiers, [&](Id id) { repo->get_classifier(id); });
    }
  }
  repo.reset();

  sqlite3* db = nullptr;
  ASSERT_EQ(sqlite3_open((dir.path() / "repo.db").c_str(), &db), SQLITE_OK);
  sqlite3_stmt* stmt = nullptr;
  ASSERT_EQ(sqlite3_prepare_v2(db, "PRAGMA foreign_key_check", -1, &stmt, nullptr), SQLITE_OK);
  EXPECT_EQ(sqlite3_step(stmt), SQLITE_DONE) << "dangling reference in "
                                             << reinterpret_cast<const char*>(sqlite3_column_text(stmt, 0));
  sqlite3_finalize(stmt);
  const char* orphaned_labels =
      "SELECT COUNT(*) FROM labels l JOIN classification_sets s ON s.id = l.classification_set_id "
      "JOIN documents d ON d.id = l.document_id JOIN attribute_values v ON v.id = l.attribute_value_id "
      "JOIN attributes a ON a.id = v.attribute_id WHERE d.collection_id != s.collection_id OR a.schema_id != s.schema_id";
  ASSERT_EQ(sqlite3_prepare_v2(db, orphaned_labels, -1, &stmt, nullptr), SQLITE_OK);
  ASSERT_EQ(sqlite3_step(stmt), SQLITE_ROW);
  EXPECT_EQ(sqlite3_column_int(stmt, 0), 0);
  sqlite3_finalize(stmt);
  sqlite3_close(db);
}

TEST(ResolveDatabaseTest, Forms) {
  const std::filesystem::path root = "/data";
  EXPECT_EQ(resolve_database("", root), "/data/repo.db");
  EXPECT_EQ(resolve_database("sqlite:///var/lib/classifysvc/repo.db", root), "/var/lib/classifysvc/repo.db");
  EXPECT_EQ(resolve_database("sqlite:////var/repo.db", root), "/var/repo.db");
  EXPECT_EQ(resolve_database("store.db", root), "/data/store.db");
  EXPECT_EQ(resolve_database(":memory:", root), ":memory:");
  EXPECT_THROW(resolve_database("postgresql://host/db", root), InvalidArgument);
  EXPECT_THROW(resolve_database("sqlite:///", root), InvalidArgument);
}

TEST(RepositoryOptionsTest, RequiresDataRoot) {
  EXPECT_THROW(Repository(RepositoryOptions{}), InvalidArgument);
}

}  // namespace
}  // namespace doccat::repo
