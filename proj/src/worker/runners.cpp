#include "doccat/worker/runners.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "doccat/common/binary_io.hpp"
#include "doccat/common/error.hpp"
#include "doccat/eval/metrics.hpp"
#include "doccat/eval/split.hpp"

namespace doccat::worker {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kPredictionsMagic = 0x50564344;  // "DCVP"
constexpr std::uint32_t kPredictionsVersion = 1;
constexpr std::uint64_t kSplitStream = 7;

void write_predictions(const fs::path& path, const nn::Tensor<float>& y) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  io::write_value(out, kPredictionsMagic);
  io::write_value(out, kPredictionsVersion);
  io::write_value(out, static_cast<std::uint64_t>(y.dim(0)));
  io::write_value(out, static_cast<std::uint64_t>(y.dim(1)));
  io::write_span(out, y.values());
  if (!out) throw StorageError("cannot write " + path.string());
}

struct LabeledSet {
  std::vector<repo::Id> documents;                 // ascending id
  std::vector<std::vector<std::size_t>> classes;   // per document, ascending
};

LabeledSet collect_labels(repo::Repository& repository, repo::Id set_id, const std::vector<repo::Id>& class_values) {
  std::unordered_map<repo::Id, std::size_t> index;
  for (std::size_t i = 0; i < class_values.size(); ++i) index[class_values[i]] = i;
  std::map<repo::Id, std::set<std::size_t>> by_document;
  for (const auto& label : repository.labels(set_id)) {
    if (const auto it = index.find(label.attribute_value_id); it != index.end()) {
      by_document[label.document_id].insert(it->second);
    }
  }
  LabeledSet out;
  for (const auto& [doc, classes] : by_document) {
    out.documents.push_back(doc);
    out.classes.emplace_back(classes.begin(), classes.end());
  }
  return out;
}

nn::Tensor<float> indicator(const LabeledSet& set, std::span<const std::size_t> rows, std::size_t k) {
  nn::Tensor<float> y(nn::Shape{rows.size(), k});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const std::size_t c : set.classes[rows[r]]) y.at(r, c) = 1.0f;
  }
  return y;
}

}  // namespace

void register_trainers(repo::Repository& repository) {
  for (const auto* trainer : classifiers::trainers()) repository.ensure_trainer(trainer->key(), trainer->name());
}

repo::TrainingSessionRecord submit_training(TaskQueue& queue, repo::Id classifier_id, repo::Id set_id,
                                           repo::Id trainer_id, const nlohmann::json& settings) {
  auto& repository = queue.repository();
  const auto classifier = repository.get_classifier(classifier_id);
  const auto set = repository.get_classification_set(set_id);
  const auto trainer_record = repository.get_trainer(trainer_id);
  const auto attribute = repository.get_attribute(classifier.attribute_id);
  if (attribute.schema_id != set.schema_id) {
    throw InvalidArgument(fmt::format("attribute {} of classifier {} is not part of schema {}", attribute.id,
                                      classifier_id, set.schema_id));
  }
  const auto& trainer = classifiers::find_trainer(trainer_record.type);
  const nlohmann::json normalized = trainer.normalize_settings(settings);

  repo::TrainingSessionRecord session;
  repo::TaskRecord task;
  repository.transaction([&] {
    task = repository.create_task(kTrainingQueue, nlohmann::json{{"classifier_id", classifier_id}}.dump());
    session = repository.create_training_session(classifier_id, trainer_id, set_id, task.id, normalized.dump());
  });
  queue.notify();
  return session;
}

nlohmann::json run_training(repo::Repository& repository, repo::Id session_id, const TrainingContext& context) {
  const auto session = repository.get_training_session(session_id);
  if (!session.classification_set_id) throw NotFoundError("the classification set of this session was deleted");
  const auto classifier = repository.get_classifier(session.classifier_id);
  const auto& trainer = classifiers::find_trainer(repository.get_trainer(session.trainer_id).type);
  const nlohmann::json settings = trainer.normalize_settings(nlohmann::json::parse(session.settings));
  const auto mode = eval::parse_label_mode(settings.at("mode").get<std::string>());

  std::vector<repo::Id> class_values;
  for (const auto& v : repository.attribute_values(classifier.attribute_id)) class_values.push_back(v.id);
  const std::size_t k = class_values.size();

  const LabeledSet labeled = collect_labels(repository, *session.classification_set_id, class_values);
  if (labeled.documents.empty()) throw InvalidArgument("no labeled documents");
  if (labeled.documents.size() < 2) throw InvalidArgument("at least two labeled documents are required");

  std::vector<std::size_t> strata;
  strata.reserve(labeled.documents.size());
  for (const auto& c : labeled.classes) strata.push_back(c.front());
  Rng rng = Rng(settings.at("seed").get<std::uint64_t>()).fork(kSplitStream);
  const auto split = eval::split_validation(strata, k, eval::kDefaultValidationFraction, rng, 1);

  auto texts = [&](std::span<const std::size_t> rows) {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const std::size_t r : rows) out.push_back(repository.load_document_content(labeled.documents[r]));
    return out;
  };
  const auto x = texts(split.train);
  const auto x_validate = texts(split.validation);
  const auto y = indicator(labeled, split.train, k);
  const auto y_validate = indicator(labeled, split.validation, k);
  std::vector<repo::Id> validation_documents;
  for (const std::size_t r : split.validation) validation_documents.push_back(labeled.documents[r]);

  const nlohmann::json metadata = {{"attribute_id", classifier.attribute_id},
                                   {"class_values", class_values},
                                   {"validation_documents", validation_documents},
                                   {"session_id", session_id}};

  classifiers::TrainingEnvironment env;
  env.default_embeddings = context.default_embeddings;
  env.cancel = context.cancel;
  const fs::path session_dir = repository.checkpoint_dir(session_id, 0).parent_path();
  fs::create_directories(session_dir);
  env.stats_csv = session_dir / "stats.csv";
  if (context.cache_batches) env.cache_dir = repository.data_root() / "cache" / std::to_string(session_id);
  const struct CacheCleanup {
    fs::path dir;
    ~CacheCleanup() {
      std::error_code ec;
      if (!dir.empty()) fs::remove_all(dir, ec);
    }
  } cleanup{env.cache_dir};

  std::vector<repo::Id> recorded;
  classifiers::TrainingCallbacks callbacks;
  callbacks.progress = [&](const classifiers::Progress& p) {
    if (context.progress) context.progress({p.message, p.fraction});
  };
  callbacks.checkpoint = [&](const classifiers::Checkpoint& c) {
    const double score = eval::evaluate(y_validate, c.y_actual, mode).macro_f1;
    const fs::path dir = repository.checkpoint_dir(session_id, static_cast<std::int64_t>(c.epoch));
    fs::remove_all(dir);
    classifiers::save_classifier(*c.classifier, dir, metadata);
    write_predictions(dir / "validation.bin", c.y_actual);
    recorded.push_back(
        repository.record_checkpoint(session_id, static_cast<std::int64_t>(c.epoch), score, c.statistics).id);
    spdlog::info("session {} checkpoint {} score {:.4f}", session_id, c.epoch, score);
  };

  const classifiers::TrainingInput input{x, y, x_validate, y_validate};
  trainer.train(input, settings, callbacks, env);

  const auto best = repository.best_checkpoint(session_id);
  if (!best) throw Error("training produced no checkpoint");
  repository.set_active_checkpoint(session.classifier_id, best->id);
  return {{"session_id", session_id}, {"checkpoints", recorded}, {"active_checkpoint_id", best->id}};
}

TaskStatus query_task(TaskQueue& queue, const std::string& task_id) {
  TaskStatus status{queue.snapshot(task_id), queue.repository().training_session_for_task(task_id), {}};
  if (status.session) status.checkpoints = queue.repository().checkpoints(status.session->id);
  return status;
}

std::shared_ptr<const classifiers::Classifier> ClassifierCache::get(repo::Repository& repository,
                                                                    const repo::CheckpointRecord& checkpoint) {
  {
    std::lock_guard lock(mu_);
    if (const auto it = loaded_.find(checkpoint.id); it != loaded_.end()) return it->second;
  }
  std::shared_ptr<const classifiers::Classifier> loaded =
      classifiers::load_classifier(repository.checkpoint_path(checkpoint));
  std::lock_guard lock(mu_);
  return loaded_.try_emplace(checkpoint.id, std::move(loaded)).first->second;
}

void ClassifierCache::clear() {
  std::lock_guard lock(mu_);
  loaded_.clear();
}

std::vector<DocumentClassification> run_classification(repo::Repository& repository, ClassifierCache& cache,
                                                       repo::Id classifier_id,
                                                       const std::vector<repo::Id>& document_ids) {
  const auto classifier = repository.get_classifier(classifier_id);
  if (!classifier.active_checkpoint_id) {
    throw ConflictError(fmt::format("classifier {} is not trained", classifier_id));
  }
  std::vector<std::string> texts;
  texts.reserve(document_ids.size());
  for (const repo::Id id : document_ids) {
    try {
      texts.push_back(repository.load_document_content(id));
    } catch (const NotFoundError& e) {
      throw InvalidArgument(fmt::format("document {}: {}", id, e.what()));
    }
  }
  if (document_ids.empty()) return {};

  const auto checkpoint = repository.get_checkpoint(*classifier.active_checkpoint_id);
  const auto model = cache.get(repository, checkpoint);
  const auto meta = read_checkpoint_metadata(repository.checkpoint_path(checkpoint));
  if (meta.class_values.size() != model->classes()) {
    throw FormatError(fmt::format("checkpoint {} has {} classes but {} class values", checkpoint.id, model->classes(),
                                  meta.class_values.size()));
  }
  const auto probs = model->classify(texts);
  const auto labels = eval::binarize(probs, model->mode());
  std::vector<DocumentClassification> out(document_ids.size());
  for (std::size_t i = 0; i < document_ids.size(); ++i) {
    out[i].document_id = document_ids[i];
    for (const std::size_t c : labels[i]) out[i].value_ids.push_back(meta.class_values[c]);
    const auto row = probs.row(i);
    out[i].probabilities.assign(row.begin(), row.end());
  }
  return out;
}

nlohmann::json to_json(const std::vector<DocumentClassification>& results) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : results) {
    out.push_back({{"document_id", r.document_id}, {"value_ids", r.value_ids}, {"probabilities", r.probabilities}});
  }
  return out;
}

std::vector<DocumentClassification> classifications_from_json(const nlohmann::json& j) {
  std::vector<DocumentClassification> out;
  for (const auto& r : j) {
    out.push_back({r.at("document_id").get<repo::Id>(), r.at("value_ids").get<std::vector<repo::Id>>(),
                   r.at("probabilities").get<std::vector<double>>()});
  }
  return out;
}

CheckpointMetadata read_checkpoint_metadata(const fs::path& dir) {
  const auto meta = classifiers::read_classifier_metadata(dir);
  try {
    return {meta.at("attribute_id").get<repo::Id>(), meta.at("class_values").get<std::vector<repo::Id>>(),
            meta.value("validation_documents", std::vector<repo::Id>{})};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint metadata in " + dir.string() + ": " + e.what());
  }
}

nn::Tensor<float> read_checkpoint_predictions(const fs::path& dir) {
  const fs::path path = dir / "validation.bin";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing " + path.string());
  if (io::read_value<std::uint32_t>(in) != kPredictionsMagic) throw FormatError("not a predictions file");
  if (io::read_value<std::uint32_t>(in) != kPredictionsVersion) throw FormatError("unsupported predictions version");
  const auto rows = io::read_value<std::uint64_t>(in);
  const auto cols = io::read_value<std::uint64_t>(in);
  nn::Tensor<float> y(nn::Shape{rows, cols});
  io::read_span(in, y.values());
  return y;
}

}  // namespace doccat::worker
