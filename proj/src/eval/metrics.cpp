#include "doccat/eval/metrics.hpp"

#include "doccat/common/error.hpp"

namespace doccat::eval {

LabelMode parse_label_mode(std::string_view name) {
  if (name == "multi_class") return LabelMode::multi_class;
  if (name == "multi_label") return LabelMode::multi_label;
  throw InvalidArgument("unknown mode '" + std::string(name) + "'");
}

std::string label_mode_name(LabelMode mode) {
  return mode == LabelMode::multi_class ? "multi_class" : "multi_label";
}

ConfusionMatrix::ConfusionMatrix(std::size_t k) : k_(k), cells_(k * k, 0) {
  if (k == 0) throw InvalidArgument("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::size_t predicted, std::size_t actual, std::uint64_t count) {
  if (predicted >= k_ || actual >= k_) {
    throw InvalidArgument("label out of range [0, " + std::to_string(k_) + ")");
  }
  cells_[predicted * k_ + actual] += count;
  total_ += count;
}

std::uint64_t ConfusionMatrix::fp(std::size_t c) const {
  std::uint64_t sum = 0;
  for (std::size_t a = 0; a < k_; ++a) {
    if (a != c) sum += cell(c, a);
  }
  return sum;
}

std::uint64_t ConfusionMatrix::fn(std::size_t c) const {
  std::uint64_t sum = 0;
  for (std::size_t p = 0; p < k_; ++p) {
    if (p != c) sum += cell(p, c);
  }
  return sum;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t sum = 0;
  for (std::size_t c = 0; c < k_; ++c) sum += tp(c);
  return sum;
}

ConfusionMatrix confusion(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred, std::size_t k) {
  if (y_true.size() != y_pred.size()) {
    throw ShapeError("confusion: " + std::to_string(y_true.size()) + " actual labels but " +
                     std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < y_true.size(); ++i) cm.add(y_pred[i], y_true[i]);
  return cm;
}

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_score(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  if (precision == recall) return precision;
  return 2.0 * precision * recall / (precision + recall);
}

namespace {

void fill_class(ClassMetrics& m, std::uint64_t items) {
  m.precision = safe_ratio(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fp));
  m.recall = safe_ratio(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fn));
  m.f1 = f1_score(m.precision, m.recall);
  m.accuracy = safe_ratio(static_cast<double>(m.tp + m.tn), static_cast<double>(items));
}

void fill_aggregates(MetricsReport& r) {
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (const auto& c : r.per_class) {
    r.macro_precision += c.precision;
    r.macro_recall += c.recall;
    r.macro_f1 += c.f1;
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
  }
  const auto k = static_cast<double>(r.per_class.size());
  r.macro_precision /= k;
  r.macro_recall /= k;
  r.macro_f1 /= k;
  r.micro_precision = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  r.micro_recall = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  r.micro_f1 = f1_score(r.micro_precision, r.micro_recall);
}

}  // namespace

MetricsReport metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.items = cm.total();
  r.per_class.resize(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    auto& m = r.per_class[c];
    m.tp = cm.tp(c);
    m.fp = cm.fp(c);
    m.fn = cm.fn(c);
    m.tn = cm.tn(c);
    fill_class(m, r.items);
  }
  fill_aggregates(r);
  r.accuracy = safe_ratio(static_cast<double>(cm.trace()), static_cast<double>(r.items));
  return r;
}

MetricsReport metrics(const nn::Tensor<float>& y_true, const nn::Tensor<float>& y_pred) {
  if (y_true.shape() != y_pred.shape() || y_true.rank() != 2) {
    throw ShapeError("indicator matrices must share an (N x K) shape");
  }
  const std::size_t n = y_true.dim(0), k = y_true.dim(1);
  MetricsReport r;
  r.items = n;
  r.per_class.resize(k);
  std::uint64_t exact = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool match = true;
    for (std::size_t c = 0; c < k; ++c) {
      const bool t = y_true.at(i, c) != 0.0f;
      const bool p = y_pred.at(i, c) != 0.0f;
      auto& m = r.per_class[c];
      if (t && p) ++m.tp;
      else if (!t && p) ++m.fp;
      else if (t && !p) ++m.fn;
      else ++m.tn;
      match = match && t == p;
    }
    exact += match;
  }
  for (auto& m : r.per_class) fill_class(m, n);
  fill_aggregates(r);
  r.accuracy = safe_ratio(static_cast<double>(exact), static_cast<double>(n));
  return r;
}

std::vector<std::size_t> argmax_rows(const nn::Tensor<float>& probs) {
  if (probs.rank() != 2) throw ShapeError("probability matrix must be (N x K)");
  std::vector<std::size_t> out(probs.dim(0));
  for (std::size_t i = 0; i < probs.dim(0); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.dim(1); ++c) {
      if (probs.at(i, c) > probs.at(i, best)) best = c;
    }
    out[i] = best;
  }
  return out;
}

std::vector<std::vector<std::size_t>> binarize(const nn::Tensor<float>& probs, LabelMode mode, double threshold) {
  if (probs.rank() != 2) throw ShapeError("probability matrix must be (N x K)");
  std::vector<std::vector<std::size_t>> out(probs.dim(0));
  if (mode == LabelMode::multi_class) {
    const auto best = argmax_rows(probs);
    for (std::size_t i = 0; i < best.size(); ++i) out[i] = {best[i]};
    return out;
  }
  for (std::size_t i = 0; i < probs.dim(0); ++i) {
    for (std::size_t c = 0; c < probs.dim(1); ++c) {
      if (probs.at(i, c) >= threshold) out[i].push_back(c);
    }
  }
  return out;
}

nn::Tensor<float> to_indicator(const std::vector<std::vector<std::size_t>>& labels, std::size_t k) {
  nn::Tensor<float> y(nn::Shape{labels.size(), k});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (auto c : labels[i]) {
      if (c >= k) throw InvalidArgument("label out of range");
      y.at(i, c) = 1.0f;
    }
  }
  return y;
}

MetricsReport evaluate(const nn::Tensor<float>& y_true, const nn::Tensor<float>& probs, LabelMode mode,
                       double threshold) {
  if (y_true.shape() != probs.shape()) throw ShapeError("targets and predictions differ in shape");
  if (mode == LabelMode::multi_class) {
    const auto truth = argmax_rows(y_true);
    const auto pred = argmax_rows(probs);
    return metrics(confusion(truth, pred, y_true.dim(1)));
  }
  return metrics(y_true, to_indicator(binarize(probs, mode, threshold), y_true.dim(1)));
}

}  // namespace doccat::eval
