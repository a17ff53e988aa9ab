#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "doccat/eval/cross_validation.hpp"
#include "doccat/eval/metrics.hpp"

namespace doccat::eval {

inline constexpr int kMetricsFormatVersion = 1;

/// {"format": "doccat-metrics", "version": 1, "items", "accuracy",
///  "macro": {...}, "micro": {...}, "per_class": [...]}
nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

/// Adds "runs", "seeds" and "summary": {metric: {"mean", "stddev"}}.
nlohmann::json to_json(const CvReport& report);

/// Columns: class,tp,tn,fp,fn,precision,recall,f1,accuracy. One row per
/// class followed by "macro" and "micro" rows with empty count cells.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace doccat::eval
