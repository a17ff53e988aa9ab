#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "doccat/nn/tensor.hpp"

namespace doccat::eval {

enum class LabelMode { multi_class, multi_label };

LabelMode parse_label_mode(std::string_view name);
std::string label_mode_name(LabelMode mode);

/// K x K counts; cell(p, a) = items predicted as class p whose actual class
/// is a.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t k);

  std::size_t classes() const { return k_; }
  std::uint64_t total() const { return total_; }

  void add(std::size_t predicted, std::size_t actual, std::uint64_t count = 1);
  std::uint64_t cell(std::size_t predicted, std::size_t actual) const { return cells_[predicted * k_ + actual]; }

  std::uint64_t tp(std::size_t c) const { return cell(c, c); }
  /// Rest of the predicted row.
  std::uint64_t fp(std::size_t c) const;
  /// Rest of the actual column.
  std::uint64_t fn(std::size_t c) const;
  std::uint64_t tn(std::size_t c) const { return total_ - tp(c) - fp(c) - fn(c); }

  std::uint64_t trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> cells_;
};

/// Throws ShapeError on length mismatch and InvalidArgument on labels
/// outside [0, K).
ConfusionMatrix confusion(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred, std::size_t k);

struct ClassMetrics {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0, accuracy = 0;
};

struct MetricsReport {
  std::uint64_t items = 0;
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  double micro_precision = 0, micro_recall = 0, micro_f1 = 0;
  /// Share of items whose label (set) was predicted exactly.
  double accuracy = 0;
};

/// Ratios with a zero denominator are 0, and F1 is 0 when P + R = 0.
/// Macro values are unweighted means of the per-class values; micro values
/// come from the summed TP/FP/FN counts.
MetricsReport metrics(const ConfusionMatrix& cm);

/// Per-class binary counts from N x K 0/1 indicator matrices (multi-label).
MetricsReport metrics(const nn::Tensor<float>& y_true, const nn::Tensor<float>& y_pred);

double safe_ratio(double num, double den);
double f1_score(double precision, double recall);

/// Label sets per row: argmax (lowest index on ties) for multi_class,
/// every class with probability >= threshold for multi_label.
std::vector<std::vector<std::size_t>> binarize(const nn::Tensor<float>& probs, LabelMode mode,
                                               double threshold = 0.5);

/// Row-wise argmax, lowest index on ties.
std::vector<std::size_t> argmax_rows(const nn::Tensor<float>& probs);

nn::Tensor<float> to_indicator(const std::vector<std::vector<std::size_t>>& labels, std::size_t k);

/// Metrics of binarized predictions against an indicator matrix.
MetricsReport evaluate(const nn::Tensor<float>& y_true, const nn::Tensor<float>& probs, LabelMode mode,
                       double threshold = 0.5);

}  // namespace doccat::eval
