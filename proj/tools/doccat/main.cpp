#include <algorithm>
#include <csignal>
#include <thread>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <pthread.h>

#include "doccat/classifiers/classifier.hpp"
#include "doccat/common/error.hpp"
#include "doccat/common/random.hpp"
#include "doccat/eval/epoch_stats.hpp"
#include "doccat/eval/metrics.hpp"
#include "doccat/eval/plot.hpp"
#include "doccat/eval/report_io.hpp"
#include "doccat/eval/split.hpp"
#include "doccat/eval/synthetic.hpp"
#include "doccat/service/server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace doccat;

namespace {

constexpr std::uint64_t kSplitStream = 7;

// One document per line: "label[,label...]<TAB>text".
struct Dataset {
  std::vector<std::string> texts;
  std::vector<std::vector<std::string>> labels;
};

Dataset read_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  Dataset d;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(fmt::format("{}:{}: expected label<TAB>text", path.string(), number));
    std::vector<std::string> labels;
    std::istringstream names(line.substr(0, tab));
    for (std::string name; std::getline(names, name, ',');) {
      if (!name.empty()) labels.push_back(name);
    }
    if (labels.empty()) throw FormatError(fmt::format("{}:{}: document without label", path.string(), number));
    d.labels.push_back(std::move(labels));
    d.texts.push_back(line.substr(tab + 1));
  }
  return d;
}

std::vector<std::vector<std::size_t>> label_indices(const Dataset& d, const std::vector<std::string>& classes) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < classes.size(); ++i) index[classes[i]] = i;
  std::vector<std::vector<std::size_t>> out;
  for (const auto& names : d.labels) {
    std::vector<std::size_t> row;
    for (const auto& n : names) {
      const auto it = index.find(n);
      if (it == index.end()) throw InvalidArgument("label '" + n + "' is unknown to the model");
      row.push_back(it->second);
    }
    out.push_back(std::move(row));
  }
  return out;
}

json parse_settings(const std::string& arg) {
  if (arg.empty()) return nullptr;
  if (arg.front() == '@') return eval::read_json_file(arg.substr(1));
  return json::parse(arg);
}

std::vector<std::string> read_documents(const std::vector<std::string>& files) {
  std::vector<std::string> docs;
  if (files.empty()) {
    for (std::string line; std::getline(std::cin, line);) docs.push_back(line);
    return docs;
  }
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read " + f);
    std::ostringstream text;
    text << in.rdbuf();
    docs.push_back(text.str());
  }
  return docs;
}

int serve(const std::string& config_path) {
  // Block the stop signals before any thread starts; one thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::Server server(service::load_config(config_path));
  server.bind();
  std::thread waiter([&] {
    int received = 0;
    sigwait(&signals, &received);
    spdlog::info("received signal {}, shutting down", received);
    server.stop();
  });
  server.listen();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  return 0;
}

int synth(const eval::SyntheticOptions& options, const fs::path& out) {
  const auto corpus = eval::synthetic_corpus(options);
  fs::create_directories(out);
  std::ofstream tsv(out / "corpus.tsv");
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    tsv << "class" << corpus.labels[i] << '\t' << corpus.text(i) << '\n';
  }
  corpus.embeddings.save(out / "embeddings.vec", text::EmbeddingFormat::word2vec_text);
  fmt::print("{} documents, {} classes, embeddings of dimension {} in {}\n", corpus.documents.size(), options.classes,
             options.dim, out.string());
  return 0;
}

struct TrainArgs {
  fs::path data;
  std::string trainer = "cnn";
  std::string settings;
  fs::path embeddings;
  std::string embeddings_format = "word2vec_text";
  fs::path out;
  double validation = eval::kDefaultValidationFraction;
};

int train(const TrainArgs& a) {
  const auto data = read_dataset(a.data);
  std::set<std::string> names;
  for (const auto& row : data.labels) names.insert(row.begin(), row.end());
  const std::vector<std::string> classes(names.begin(), names.end());
  const auto labels = label_indices(data, classes);
  const std::size_t k = classes.size();

  const auto& trainer = classifiers::find_trainer(a.trainer);
  const json settings = trainer.normalize_settings(parse_settings(a.settings));
  const auto mode = eval::parse_label_mode(settings.at("mode").get<std::string>());

  std::vector<std::size_t> strata;
  for (const auto& row : labels) strata.push_back(row.front());
  Rng rng = Rng(settings.at("seed").get<std::uint64_t>()).fork(kSplitStream);
  const auto split = eval::split_validation(strata, k, a.validation, rng, 1);

  auto pick = [&](std::span<const std::size_t> rows) {
    std::vector<std::string> x;
    std::vector<std::vector<std::size_t>> y;
    for (const std::size_t r : rows) {
      x.push_back(data.texts[r]);
      y.push_back(labels[r]);
    }
    return std::make_pair(std::move(x), eval::to_indicator(y, k));
  };
  const auto [x, y] = pick(split.train);
  const auto [xv, yv] = pick(split.validation);

  fs::create_directories(a.out);
  classifiers::TrainingEnvironment env;
  env.stats_csv = a.out / "stats.csv";
  fs::remove(env.stats_csv);
  if (!a.embeddings.empty()) {
    env.default_embeddings =
        classifiers::EmbeddingReference{fs::absolute(a.embeddings), text::parse_embedding_format(a.embeddings_format)};
  }
  env.cache_dir = a.out / "cache";

  const json metadata = {{"class_names", classes}, {"settings", settings}};
  json epochs = json::array();
  std::size_t best_epoch = 0;
  double best_score = -1;
  classifiers::TrainingCallbacks callbacks;
  callbacks.checkpoint = [&](const classifiers::Checkpoint& c) {
    const double score = eval::evaluate(yv, c.y_actual, mode).macro_f1;
    const auto dir = a.out / std::to_string(c.epoch);
    fs::remove_all(dir);
    classifiers::save_classifier(*c.classifier, dir, metadata);
    epochs.push_back({{"epoch", c.epoch}, {"score", score}, {"statistics", c.statistics}});
    if (score > best_score) {
      best_score = score;
      best_epoch = c.epoch;
    }
    fmt::print("epoch {:>3}  loss {:.4f}  val_loss {:.4f}  f1_macro {:.4f}\n", c.epoch, c.statistics.at("loss"),
               c.statistics.at("val_loss"), score);
  };
  trainer.train({x, y, xv, yv}, settings, callbacks, env);
  fs::remove_all(env.cache_dir);

  const json summary = {{"trainer", trainer.key()},   {"classes", classes},
                        {"train_size", x.size()},     {"validation_size", xv.size()},
                        {"best_epoch", best_epoch},   {"best_score", best_score},
                        {"epochs", epochs},           {"settings", settings}};
  eval::write_json_file(a.out / "summary.json", summary);
  fmt::print("best epoch {} with validation macro-F1 {:.4f}; model in {}\n", best_epoch, best_score,
             (a.out / std::to_string(best_epoch)).string());
  return 0;
}

int evaluate(const fs::path& model_dir, const fs::path& data_path, const fs::path& json_out, bool csv) {
  const auto model = classifiers::load_classifier(model_dir);
  const auto metadata = classifiers::read_classifier_metadata(model_dir);
  const auto classes = metadata.at("class_names").get<std::vector<std::string>>();
  const auto data = read_dataset(data_path);
  const auto y_true = eval::to_indicator(label_indices(data, classes), classes.size());
  const auto probs = model->classify(data.texts);
  const auto report = eval::evaluate(y_true, probs, model->mode());
  if (!json_out.empty()) eval::write_json_file(json_out, eval::to_json(report));
  if (csv) {
    eval::write_metrics_csv(std::cout, report);
  } else {
    fmt::print("documents {}  accuracy {:.4f}\nmacro  P {:.4f}  R {:.4f}  F1 {:.4f}\nmicro  P {:.4f}  R {:.4f}  F1 {:.4f}\n",
               data.texts.size(), report.accuracy, report.macro_precision, report.macro_recall, report.macro_f1,
               report.micro_precision, report.micro_recall, report.micro_f1);
  }
  return 0;
}

int classify(const fs::path& model_dir, const std::vector<std::string>& files) {
  const auto model = classifiers::load_classifier(model_dir);
  const auto metadata = classifiers::read_classifier_metadata(model_dir);
  const auto classes = metadata.value("class_names", std::vector<std::string>{});
  const auto docs = read_documents(files);
  if (docs.empty()) return 0;
  const auto probs = model->classify(docs);
  const auto assigned = eval::binarize(probs, model->mode());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    json labels = json::array();
    for (const std::size_t c : assigned[i]) labels.push_back(c < classes.size() ? json(classes[c]) : json(c));
    std::vector<double> row;
    for (std::size_t c = 0; c < probs.dim(1); ++c) row.push_back(probs.at(i, c));
    const json out = {{"document", files.empty() ? json(i) : json(files[i])}, {"labels", labels}, {"probabilities", row}};
    std::cout << out.dump() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Document categorization service and offline tools"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  std::string config_path;
  auto* serve_cmd = app.add_subcommand("serve", "Run the REST service");
  serve_cmd->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);

  eval::SyntheticOptions synth_options;
  fs::path synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write a labeled synthetic corpus and its embeddings");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--classes", synth_options.classes)->capture_default_str();
  synth_cmd->add_option("--per-class", synth_options.per_class)->capture_default_str();
  synth_cmd->add_option("--vocab", synth_options.vocab_size)->capture_default_str();
  synth_cmd->add_option("--overlap", synth_options.overlap)->capture_default_str();
  synth_cmd->add_option("--doc-len", synth_options.doc_len)->capture_default_str();
  synth_cmd->add_option("--dim", synth_options.dim)->capture_default_str();
  synth_cmd->add_option("--seed", synth_options.seed)->capture_default_str();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier on a label<TAB>text corpus");
  train_cmd->add_option("--data", train_args.data, "Corpus file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--trainer", train_args.trainer)->check(CLI::IsMember({"cnn", "svm"}))->capture_default_str();
  train_cmd->add_option("--settings", train_args.settings, "JSON object or @file");
  train_cmd->add_option("--embeddings", train_args.embeddings, "Embedding file")->check(CLI::ExistingFile);
  train_cmd->add_option("--embeddings-format", train_args.embeddings_format)
      ->check(CLI::IsMember({"word2vec_text", "glove_text"}))
      ->capture_default_str();
  train_cmd->add_option("--validation", train_args.validation, "Validation fraction")->capture_default_str();
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();

  fs::path model_dir, data_path, json_out;
  bool csv = false;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a saved classifier on a labeled corpus");
  evaluate_cmd->add_option("--model", model_dir, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  evaluate_cmd->add_option("--data", data_path, "Corpus file")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--json", json_out, "Write the metrics report as JSON");
  evaluate_cmd->add_flag("--csv", csv, "Print per-class metrics as CSV");

  fs::path stats_path, svg_out;
  auto* plot_cmd = app.add_subcommand("plot", "Render a training statistics CSV as SVG");
  plot_cmd->add_option("--stats", stats_path, "stats.csv")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", svg_out, "SVG file")->required();

  std::vector<std::string> files;
  auto* classify_cmd = app.add_subcommand("classify", "Classify text files, or stdin lines, with a saved classifier");
  classify_cmd->add_option("--model", model_dir, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  classify_cmd->add_option("files", files, "Documents");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*serve_cmd) return serve(config_path);
    if (*synth_cmd) return synth(synth_options, synth_out);
    if (*train_cmd) return train(train_args);
    if (*evaluate_cmd) return evaluate(model_dir, data_path, json_out, csv);
    if (*plot_cmd) {
      eval::plot_stats(stats_path, svg_out);
      return 0;
    }
    if (*classify_cmd) return classify(model_dir, files);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
