#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "doccat/eval/metrics.hpp"
#include "doccat/eval/split.hpp"

namespace doccat::eval {

/// Trains on split.train and returns one predicted class per entry of
/// split.validation, in order. seed is the run's private seed.
using CvTrainer = std::function<std::vector<std::size_t>(const Split& split, std::uint64_t seed)>;

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

struct CvReport {
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsReport> runs;
  std::map<std::string, MetricSummary> summary;  // keyed by aggregate_values() names
};

/// accuracy, macro_precision, macro_recall, macro_f1, micro_precision,
/// micro_recall, micro_f1.
std::map<std::string, double> aggregate_values(const MetricsReport& report);

/// Mean and sample standard deviation per aggregate. The result does not
/// depend on the order of the reports.
std::map<std::string, MetricSummary> summarize(std::span<const MetricsReport> reports);

struct MonteCarloOptions {
  std::size_t runs = 10;
  double fraction = kDefaultValidationFraction;
  std::size_t min_validation = 0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Independent stratified random splits, one per run; the run seeds are
/// derived from options.seed. Any trainer exception aborts the suite and is
/// rethrown.
CvReport monte_carlo_cv(const CvTrainer& trainer, std::span<const std::size_t> labels, std::size_t k,
                        const MonteCarloOptions& options);

/// Stratified n-fold cross-validation; every item is validated exactly once.
CvReport n_fold_cv(const CvTrainer& trainer, std::span<const std::size_t> labels, std::size_t k, std::size_t n,
                   std::uint64_t seed, std::size_t threads = 1);

}  // namespace doccat::eval
