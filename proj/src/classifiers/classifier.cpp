#include "doccat/classifiers/classifier.hpp"

#include <cmath>
#include <fstream>

#include "doccat/classifiers/cnn.hpp"
#include "doccat/classifiers/svm.hpp"
#include "doccat/common/error.hpp"
#include "doccat/nn/loss.hpp"

namespace doccat::classifiers {

namespace fs = std::filesystem;

void save_classifier(const Classifier& classifier, const fs::path& dir, const nlohmann::json& metadata) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StorageError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json manifest = {{"format", "doccat-classifier"},
                             {"version", kClassifierFormatVersion},
                             {"trainer", classifier.trainer_key()},
                             {"classes", classifier.classes()},
                             {"mode", eval::label_mode_name(classifier.mode())},
                             {"metadata", metadata}};
  classifier.save_state(dir, manifest);
  // The manifest goes last so a partially written directory never loads.
  const auto tmp = dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw StorageError("cannot write " + tmp.string());
    out << manifest.dump(2) << '\n';
    if (!out) throw StorageError("failed writing " + tmp.string());
  }
  fs::rename(tmp, dir / "manifest.json", ec);
  if (ec) throw StorageError("cannot finalize " + (dir / "manifest.json").string() + ": " + ec.message());
}

nlohmann::json read_classifier_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw FormatError("no classifier manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!manifest.is_object() || manifest.value("format", "") != "doccat-classifier") {
    throw FormatError(path.string() + " is not a classifier manifest");
  }
  const auto version = manifest.value("version", 0);
  if (version != kClassifierFormatVersion) {
    throw FormatError("unsupported classifier format version " + std::to_string(version) + " in " +
                      path.string());
  }
  return manifest;
}

nlohmann::json read_classifier_metadata(const fs::path& dir) {
  return read_classifier_manifest(dir).value("metadata", nlohmann::json::object());
}

std::unique_ptr<Classifier> load_classifier(const fs::path& dir) {
  const auto manifest = read_classifier_manifest(dir);
  try {
    return find_trainer(manifest.at("trainer").get<std::string>()).load(dir, manifest);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed classifier manifest in " + dir.string() + ": " + e.what());
  }
}

void validate_training_input(const TrainingInput& input, eval::LabelMode mode) {
  if (input.x.empty()) throw InvalidArgument("empty training set");
  auto check = [mode](std::span<const std::string> x, const nn::Tensor<float>& y, const char* what) {
    if (x.empty() && y.size() == 0) return;
    if (y.rank() != 2 || y.dim(0) != x.size()) {
      throw ShapeError(std::string(what) + " labels must be a " + std::to_string(x.size()) + " x K matrix, got " +
                       nn::to_string(y.shape()));
    }
    for (std::size_t i = 0; i < y.dim(0); ++i) {
      std::size_t ones = 0;
      for (std::size_t c = 0; c < y.dim(1); ++c) {
        const float v = y.at(i, c);
        if (v != 0.0f && v != 1.0f) throw InvalidArgument(std::string(what) + " labels must be 0 or 1");
        ones += v == 1.0f;
      }
      if (mode == eval::LabelMode::multi_class && ones != 1) {
        throw InvalidArgument(std::string(what) + " row " + std::to_string(i) +
                              " must carry exactly one label in multi_class mode");
      }
    }
  };
  check(input.x, input.y, "training");
  check(input.x_validate, input.y_validate, "validation");
  if (input.y.dim(1) < 2) throw InvalidArgument("at least two classes are required");
  if (!input.x_validate.empty() && input.y_validate.dim(1) != input.y.dim(1)) {
    throw ShapeError("training and validation class counts differ");
  }
}

std::span<const Trainer* const> trainers() {
  static const CnnTrainer cnn;
  static const SvmTrainer svm;
  static const Trainer* const all[] = {&cnn, &svm};
  return all;
}

const Trainer& find_trainer(std::string_view key) {
  for (const auto* t : trainers()) {
    if (t->key() == key) return *t;
  }
  throw NotFoundError("unknown trainer '" + std::string(key) + "'");
}

ValidationScores score_validation(const nn::Tensor<float>& y_validate, const nn::Tensor<float>& y_actual,
                                  eval::LabelMode mode) {
  ValidationScores s;
  if (y_validate.size() == 0 || y_validate.dim(0) == 0) return s;
  const auto kind = mode == eval::LabelMode::multi_class ? nn::LossKind::categorical_cross_entropy
                                                         : nn::LossKind::binary_cross_entropy;
  s.loss = nn::loss(kind, y_validate, y_actual);
  const auto report = eval::evaluate(y_validate, y_actual, mode);
  s.f1_macro = report.macro_f1;
  s.f1_micro = report.micro_f1;
  s.accuracy = report.accuracy;
  return s;
}

Progress make_progress(std::size_t epoch, std::size_t epochs, std::size_t batch, std::size_t batches,
                       std::string message) {
  Progress p{epoch, epochs, batch, batches, 0.0, std::move(message)};
  const double done = static_cast<double>(epoch * batches + batch + 1);
  p.fraction = std::min(1.0, done / static_cast<double>(std::max<std::size_t>(1, epochs * batches)));
  return p;
}

}  // namespace doccat::classifiers
