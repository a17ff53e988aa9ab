#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "doccat/common/error.hpp"
#include "doccat/worker/pool.hpp"
#include "doccat/worker/runners.hpp"
#include "doccat/worker/task_queue.hpp"
#include "support/seeded_store.hpp"
#include "support/temp_dir.hpp"

namespace doccat::worker {
namespace {

using namespace std::chrono_literals;

const eval::SyntheticOptions kCorpus{
    .classes = 3, .per_class = 20, .vocab_size = 120, .overlap = 0.1, .doc_len = 25, .dim = 8, .seed = 4};

nlohmann::json tiny_cnn(int epochs) {
  return {{"epochs", epochs},      {"filter_count", 8},    {"filter_lens", {1, 2}}, {"dense_size", 16},
          {"batch_size", 16},      {"max_timesteps", 25},  {"learning_rate", 0.01}, {"prefetch", false}};
}

class WorkerTest : public ::testing::Test {
 protected:
  doccat::testing::TempDir dir;
  repo::Repository repository{repo::RepositoryOptions{dir.path()}};
  TaskQueue queue{repository};
  doccat::testing::SeededStore store;
  repo::Id cnn = 0, svm = 0;

  void SetUp() override {
    register_trainers(repository);
    for (const auto& t : repository.list_trainers().items) (t.type == "cnn" ? cnn : svm) = t.id;
    store = doccat::testing::seed_store(repository, kCorpus);
  }

  TrainingContext context() const {
    TrainingContext c;
    c.default_embeddings = classifiers::EmbeddingReference{store.embeddings};
    return c;
  }

  WorkerOptions options(std::size_t training = 1) const {
    WorkerOptions o;
    o.training_workers = training;
    o.default_embeddings = classifiers::EmbeddingReference{store.embeddings};
    o.poll = 50ms;
    return o;
  }

  TaskSnapshot await(const std::string& task_id, std::chrono::milliseconds timeout = 60s) {
    return queue.wait(task_id, timeout);
  }
};

TEST_F(WorkerTest, TrainersAreRegistered) {
  ASSERT_NE(cnn, 0);
  ASSERT_NE(svm, 0);
  register_trainers(repository);
  EXPECT_EQ(repository.list_trainers().total, 2u);
}

TEST_F(WorkerTest, SubmitCreatesSessionAndPendingTask) {
  const auto session = submit_training(queue, store.classifier.id, store.set.id, svm, nullptr);
  EXPECT_EQ(session.classifier_id, store.classifier.id);
  EXPECT_EQ(session.classification_set_id, store.set.id);
  const auto task = repository.get_task(session.task_id);
  EXPECT_EQ(task.state, repo::TaskState::pending);
  EXPECT_EQ(task.queue, kTrainingQueue);
  const auto settings = nlohmann::json::parse(session.settings);
  EXPECT_EQ(settings, classifiers::find_trainer("svm").default_settings());
}

TEST_F(WorkerTest, RejectedSubmitLeavesNoSession) {
  EXPECT_THROW(submit_training(queue, store.classifier.id, store.set.id, 999, nullptr), NotFoundError);
  EXPECT_THROW(submit_training(queue, 999, store.set.id, svm, nullptr), NotFoundError);
  EXPECT_THROW(submit_training(queue, store.classifier.id, store.set.id, svm, {{"no_such_setting", 1}}),
               InvalidArgument);
  EXPECT_THROW(submit_training(queue, store.classifier.id, store.set.id, svm, nlohmann::json::array()),
               InvalidArgument);
  const auto other = repository.create_schema({"other", "Other", {{"kind", "Kind", {{"a", {}}, {"b", {}}}}}});
  const auto foreign = repository.create_classifier(repository.attributes(other.id)[0].id, "foreign", std::nullopt);
  EXPECT_THROW(submit_training(queue, foreign.id, store.set.id, svm, nullptr), InvalidArgument);
  EXPECT_TRUE(repository.training_sessions(store.classifier.id).empty());
  EXPECT_TRUE(repository.tasks(kTrainingQueue).empty());
}

TEST_F(WorkerTest, TwoSubmitsAreIndependentSessions) {
  const auto a = submit_training(queue, store.classifier.id, store.set.id, svm, nullptr);
  const auto b = submit_training(queue, store.classifier.id, store.set.id, svm, nullptr);
  EXPECT_NE(a.id, b.id);
  EXPECT_NE(a.task_id, b.task_id);
  EXPECT_EQ(repository.training_sessions(store.classifier.id).size(), 2u);
}

TEST_F(WorkerTest, CnnTrainingRecordsEveryEpoch) {
  const auto session = submit_training(queue, store.classifier.id, store.set.id, cnn, tiny_cnn(3));
  std::vector<double> progress;
  auto ctx = context();
  ctx.progress = [&](const TaskProgress& p) { progress.push_back(p.progress); };
  const auto result = run_training(repository, session.id, ctx);

  const auto checkpoints = repository.checkpoints(session.id);
  ASSERT_EQ(checkpoints.size(), 3u);
  const auto best = *std::max_element(checkpoints.begin(), checkpoints.end(),
                                      [](const auto& a, const auto& b) { return a.score < b.score; });
  EXPECT_EQ(repository.get_classifier(store.classifier.id).active_checkpoint_id, best.id);
  EXPECT_EQ(result.at("active_checkpoint_id").get<repo::Id>(), best.id);
  ASSERT_FALSE(progress.empty());
  EXPECT_DOUBLE_EQ(progress.back(), 1.0);
  EXPECT_TRUE(std::is_sorted(progress.begin(), progress.end()));

  for (const auto& c : checkpoints) {
    EXPECT_EQ(c.name, "Checkpoint " + std::to_string(c.epoch));
    for (const char* key : {"loss", "val_loss", "f1_macro", "f1_micro"}) EXPECT_TRUE(c.statistics.count(key)) << key;
    EXPECT_DOUBLE_EQ(c.score, c.statistics.at("f1_macro"));
    const auto path = repository.checkpoint_path(c);
    const auto meta = read_checkpoint_metadata(path);
    EXPECT_EQ(meta.class_values, store.values);
    EXPECT_TRUE(std::is_sorted(meta.class_values.begin(), meta.class_values.end()));
    EXPECT_EQ(meta.attribute_id, store.attribute.id);
    ASSERT_FALSE(meta.validation_documents.empty());

    const auto stored = read_checkpoint_predictions(path);
    std::vector<std::string> docs;
    for (const auto id : meta.validation_documents) docs.push_back(repository.load_document_content(id));
    const auto again = classifiers::load_classifier(path)->classify(docs);
    ASSERT_EQ(again.shape(), stored.shape());
    for (std::size_t i = 0; i < stored.size(); ++i) EXPECT_NEAR(again[i], stored[i], 1e-6);
  }
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "checkpoints" / std::to_string(session.id) / "stats.csv"));
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "cache" / std::to_string(session.id)));
}

TEST_F(WorkerTest, ValidationSplitIsStratifiedAndNonEmpty) {
  const auto session = submit_training(queue, store.classifier.id, store.set.id, svm, nullptr);
  run_training(repository, session.id, context());
  const auto checkpoints = repository.checkpoints(session.id);
  ASSERT_EQ(checkpoints.size(), 1u);
  const auto meta = read_checkpoint_metadata(repository.checkpoint_path(checkpoints[0]));
  EXPECT_EQ(meta.validation_documents.size(), 6u);
  std::vector<int> per_class(3);
  for (const auto id : meta.validation_documents) {
    const auto pos = std::find(store.documents.begin(), store.documents.end(), id) - store.documents.begin();
    ++per_class[store.labels[pos]];
  }
  EXPECT_EQ(per_class, (std::vector<int>{2, 2, 2}));
}

TEST_F(WorkerTest, EmptySetFailsWithoutActivating) {
  const auto empty = repository.create_classification_set(store.collection.id, store.schema.id, "empty", "Empty");
  const auto session = submit_training(queue, store.classifier.id, empty.id, svm, nullptr);
  WorkerPool pool(queue, options());
  pool.start();
  const auto done = await(session.task_id);
  EXPECT_EQ(done.state, repo::TaskState::failure);
  EXPECT_EQ(done.error, "no labeled documents");
  EXPECT_FALSE(repository.get_classifier(store.classifier.id).active_checkpoint_id);
}

TEST_F(WorkerTest, PoolTrainsAndClassifies) {
  WorkerPool pool(queue, options());
  pool.start();
  EXPECT_THROW(pool.classify(store.classifier.id, {store.documents[0]}, 10s), ConflictError);

  const auto session = submit_training(queue, store.classifier.id, store.set.id, svm, nullptr);
  const auto done = await(session.task_id);
  ASSERT_EQ(done.state, repo::TaskState::success) << done.error;
  ASSERT_TRUE(done.progress);
  EXPECT_DOUBLE_EQ(done.progress->progress, 1.0);

  const std::vector<repo::Id> ids(store.documents.begin(), store.documents.begin() + 10);
  const auto first = pool.classify(store.classifier.id, ids, 30s);
  ASSERT_EQ(first.size(), ids.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(first[i].document_id, ids[i]);
    ASSERT_EQ(first[i].value_ids.size(), 1u);
    EXPECT_EQ(first[i].probabilities.size(), 3u);
    correct += first[i].value_ids[0] == store.values[store.labels[i]];
  }
  EXPECT_GE(correct, 8u);
  const auto second = pool.classify(store.classifier.id, ids, 30s);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(second[i].value_ids, first[i].value_ids);
    EXPECT_EQ(second[i].probabilities, first[i].probabilities);
  }
  EXPECT_TRUE(pool.classify(store.classifier.id, {}, 1s).empty());
  EXPECT_THROW(pool.classify(store.classifier.id, {ids[0], 4242}, 10s), InvalidArgument);
  const auto blank = repository.create_document(store.collection.id, {});
  EXPECT_THROW(pool.classify(store.classifier.id, {blank.id}, 10s), InvalidArgument);
  EXPECT_THROW(pool.classify(999, {ids[0]}, 10s), NotFoundError);
}

TEST_F(WorkerTest, ClassificationRunnerMapsClassesToValues) {
  const auto session = submit_training(queue, store.classifier.id, store.set.id, svm, nullptr);
  run_training(repository, session.id, context());
  ClassifierCache cache;
  const auto results = run_classification(repository, cache, store.classifier.id, store.documents);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    ASSERT_EQ(results[i].value_ids.size(), 1u);
    const auto& p = results[i].probabilities;
    const auto arg = std::max_element(p.begin(), p.end()) - p.begin();
    EXPECT_EQ(results[i].value_ids[0], store.values[arg]);
    correct += results[i].value_ids[0] == store.values[store.labels[i]];
  }
  EXPECT_GE(correct, results.size() * 9 / 10);
  EXPECT_EQ(classifications_from_json(to_json(results)).size(), results.size());
}

TEST_F(WorkerTest, ConcurrentWorkersConsumeEachTaskOnce) {
  std::vector<repo::TrainingSessionRecord> sessions;
  for (int i = 0; i < 3; ++i) {
    sessions.push_back(submit_training(queue, store.classifier.id, store.set.id, cnn, tiny_cnn(2)));
  }
  WorkerPool pool(queue, options(2));
  pool.start();
  for (const auto& s : sessions) {
    const auto done = await(s.task_id, 120s);
    EXPECT_EQ(done.state, repo::TaskState::success) << done.error;
    EXPECT_EQ(repository.checkpoints(s.id).size(), 2u);
  }
  const auto active = repository.get_classifier(store.classifier.id).active_checkpoint_id;
  ASSERT_TRUE(active);
}

TEST_F(WorkerTest, RestartFailsOrphansAndRunsPending) {
  const auto orphan = submit_training(queue, store.classifier.id, store.set.id, svm, nullptr);
  const auto pending = submit_training(queue, store.classifier.id, store.set.id, svm, nullptr);
  ASSERT_EQ(repository.claim_task(kTrainingQueue)->id, orphan.task_id);
  repository.record_checkpoint(orphan.id, 0, 0.5, {{"loss", 1.0}});

  WorkerPool pool(queue, options());
  pool.start();
  const auto done = await(pending.task_id);
  EXPECT_EQ(done.state, repo::TaskState::success) << done.error;
  const auto failed = repository.get_task(orphan.task_id);
  EXPECT_EQ(failed.state, repo::TaskState::failure);
  EXPECT_NE(failed.error.find("interrupted"), std::string::npos);
  EXPECT_EQ(repository.checkpoints(orphan.id).size(), 1u);
}

TEST_F(WorkerTest, StopInterruptsTrainingButKeepsCheckpoints) {
  const auto session = submit_training(queue, store.classifier.id, store.set.id, cnn, tiny_cnn(500));
  WorkerPool pool(queue, options());
  pool.start();
  const auto deadline = std::chrono::steady_clock::now() + 60s;
  while (repository.checkpoints(session.id).empty() && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(20ms);
  }
  pool.stop();
  const auto task = repository.get_task(session.task_id);
  EXPECT_EQ(task.state, repo::TaskState::failure);
  EXPECT_FALSE(repository.checkpoints(session.id).empty());
  EXPECT_FALSE(repository.get_classifier(store.classifier.id).active_checkpoint_id);
}

TEST_F(WorkerTest, QueryMergesLiveProgressAndCheckpoints) {
  const auto session = submit_training(queue, store.classifier.id, store.set.id, svm, nullptr);
  auto status = query_task(queue, session.task_id);
  EXPECT_EQ(status.task.state, repo::TaskState::pending);
  EXPECT_FALSE(status.task.progress);
  ASSERT_TRUE(status.session);
  EXPECT_EQ(status.session->id, session.id);

  ASSERT_TRUE(queue.claim(kTrainingQueue, 0ms));
  queue.report(session.task_id, {"epoch 1/5", 0.15});
  queue.report(session.task_id, {"epoch 1/5", 0.10});
  repository.record_checkpoint(session.id, 0, 0.7, {{"loss", 0.426}});
  status = query_task(queue, session.task_id);
  EXPECT_EQ(status.task.state, repo::TaskState::progress);
  ASSERT_TRUE(status.task.progress);
  EXPECT_DOUBLE_EQ(status.task.progress->progress, 0.15);
  ASSERT_EQ(status.checkpoints.size(), 1u);
  EXPECT_DOUBLE_EQ(status.checkpoints[0].score, 0.7);

  queue.succeed(session.task_id, {{"ok", true}});
  status = query_task(queue, session.task_id);
  EXPECT_EQ(status.task.state, repo::TaskState::success);
  EXPECT_EQ(status.task.result.at("ok"), true);
  EXPECT_THROW(query_task(queue, "missing"), NotFoundError);
}

TEST_F(WorkerTest, WaitTimesOutOnPendingTask) {
  const auto task = queue.submit(kClassifyQueue, {{"classifier_id", 1}});
  const auto snap = queue.wait(task.id, 50ms);
  EXPECT_EQ(snap.state, repo::TaskState::pending);
  EXPECT_FALSE(queue.claim(kTrainingQueue, 10ms));
}

}  // namespace
}  // namespace doccat::worker
