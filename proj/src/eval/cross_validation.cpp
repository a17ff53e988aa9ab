#include "doccat/eval/cross_validation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "doccat/common/error.hpp"

namespace doccat::eval {

std::map<std::string, double> aggregate_values(const MetricsReport& r) {
  return {{"accuracy", r.accuracy},
          {"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"macro_f1", r.macro_f1},
          {"micro_precision", r.micro_precision},
          {"micro_recall", r.micro_recall},
          {"micro_f1", r.micro_f1}};
}

std::map<std::string, MetricSummary> summarize(std::span<const MetricsReport> reports) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : reports) {
    for (const auto& [name, v] : aggregate_values(r)) values[name].push_back(v);
  }
  std::map<std::string, MetricSummary> out;
  for (auto& [name, vs] : values) {
    // Sorted summation makes the floating-point result order independent.
    std::sort(vs.begin(), vs.end());
    double sum = 0.0;
    for (double v : vs) sum += v;
    const double mean = sum / static_cast<double>(vs.size());
    std::vector<double> sq;
    for (double v : vs) sq.push_back((v - mean) * (v - mean));
    std::sort(sq.begin(), sq.end());
    double ss = 0.0;
    for (double v : sq) ss += v;
    const double stddev = vs.size() > 1 ? std::sqrt(ss / static_cast<double>(vs.size() - 1)) : 0.0;
    out[name] = {mean, stddev};
  }
  return out;
}

namespace {

MetricsReport evaluate_run(const CvTrainer& trainer, const Split& split, std::span<const std::size_t> labels,
                           std::size_t k, std::uint64_t seed) {
  const auto predicted = trainer(split, seed);
  if (predicted.size() != split.validation.size()) {
    throw ShapeError("trainer returned " + std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(split.validation.size()) + " validation items");
  }
  std::vector<std::size_t> actual;
  actual.reserve(split.validation.size());
  for (auto i : split.validation) actual.push_back(labels[i]);
  return metrics(confusion(actual, predicted, k));
}

// Runs job(i) for i in [0, count) on up to `threads` threads; the first
// exception is rethrown after all threads stop.
template <typename Job>
void run_parallel(std::size_t count, std::size_t threads, Job&& job) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

CvReport monte_carlo_cv(const CvTrainer& trainer, std::span<const std::size_t> labels, std::size_t k,
                        const MonteCarloOptions& options) {
  if (options.runs == 0) throw InvalidArgument("monte carlo cross-validation needs at least one run");
  CvReport report;
  report.runs.resize(options.runs);
  for (std::size_t r = 0; r < options.runs; ++r) report.seeds.push_back(Rng::derive_seed(options.seed, r));
  run_parallel(options.runs, options.threads, [&](std::size_t r) {
    Rng rng(report.seeds[r]);
    const Split split = split_validation(labels, k, options.fraction, rng, options.min_validation);
    report.runs[r] = evaluate_run(trainer, split, labels, k, Rng::derive_seed(report.seeds[r], 1));
  });
  report.summary = summarize(report.runs);
  return report;
}

CvReport n_fold_cv(const CvTrainer& trainer, std::span<const std::size_t> labels, std::size_t k, std::size_t n,
                   std::uint64_t seed, std::size_t threads) {
  Rng rng(seed);
  const auto folds = assign_folds(labels, k, n, rng);
  CvReport report;
  report.runs.resize(n);
  for (std::size_t f = 0; f < n; ++f) report.seeds.push_back(Rng::derive_seed(seed, f + 1));
  run_parallel(n, threads, [&](std::size_t f) {
    report.runs[f] = evaluate_run(trainer, fold_split(folds, f), labels, k, report.seeds[f]);
  });
  report.summary = summarize(report.runs);
  return report;
}

}  // namespace doccat::eval
