#include "doccat/eval/report_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <ostream>

#include "doccat/common/error.hpp"

namespace doccat::eval {

namespace {

nlohmann::json averages(double p, double r, double f1) { return {{"precision", p}, {"recall", r}, {"f1", f1}}; }

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    per_class.push_back({{"class", c},
                         {"tp", m.tp},
                         {"tn", m.tn},
                         {"fp", m.fp},
                         {"fn", m.fn},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"accuracy", m.accuracy}});
  }
  return {{"format", "doccat-metrics"},
          {"version", kMetricsFormatVersion},
          {"items", r.items},
          {"accuracy", r.accuracy},
          {"macro", averages(r.macro_precision, r.macro_recall, r.macro_f1)},
          {"micro", averages(r.micro_precision, r.micro_recall, r.micro_f1)},
          {"per_class", per_class}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "doccat-metrics") throw FormatError("not a doccat-metrics document");
    if (j.at("version").get<int>() != kMetricsFormatVersion) {
      throw FormatError("unsupported metrics version " + j.at("version").dump());
    }
    MetricsReport r;
    r.items = j.at("items").get<std::uint64_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_precision = j.at("macro").at("precision").get<double>();
    r.macro_recall = j.at("macro").at("recall").get<double>();
    r.macro_f1 = j.at("macro").at("f1").get<double>();
    r.micro_precision = j.at("micro").at("precision").get<double>();
    r.micro_recall = j.at("micro").at("recall").get<double>();
    r.micro_f1 = j.at("micro").at("f1").get<double>();
    for (const auto& c : j.at("per_class")) {
      ClassMetrics m;
      m.tp = c.at("tp").get<std::uint64_t>();
      m.tn = c.at("tn").get<std::uint64_t>();
      m.fp = c.at("fp").get<std::uint64_t>();
      m.fn = c.at("fn").get<std::uint64_t>();
      m.precision = c.at("precision").get<double>();
      m.recall = c.at("recall").get<double>();
      m.f1 = c.at("f1").get<double>();
      m.accuracy = c.at("accuracy").get<double>();
      r.per_class.push_back(m);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed metrics document: ") + e.what());
  }
}

nlohmann::json to_json(const CvReport& report) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : report.runs) runs.push_back(to_json(r));
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [name, s] : report.summary) summary[name] = {{"mean", s.mean}, {"stddev", s.stddev}};
  return {{"format", "doccat-cv"},
          {"version", kMetricsFormatVersion},
          {"seeds", report.seeds},
          {"runs", runs},
          {"summary", summary}};
}

void write_metrics_csv(std::ostream& out, const MetricsReport& r) {
  out << "class,tp,tn,fp,fn,precision,recall,f1,accuracy\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", c, m.tp, m.tn, m.fp, m.fn, m.precision, m.recall, m.f1,
                       m.accuracy);
  }
  out << fmt::format("macro,,,,,{},{},{},{}\n", r.macro_precision, r.macro_recall, r.macro_f1, r.accuracy);
  out << fmt::format("micro,,,,,{},{},{},{}\n", r.micro_precision, r.micro_recall, r.micro_f1, r.accuracy);
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw StorageError("failed writing " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace doccat::eval
