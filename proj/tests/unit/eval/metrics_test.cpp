#include "doccat/eval/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "doccat/common/error.hpp"
#include "doccat/common/random.hpp"

namespace doccat::eval {
namespace {

struct Recount {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

// Independent per-item recount, no confusion matrix involved.
std::vector<Recount> brute_force(const std::vector<std::size_t>& y_true, const std::vector<std::size_t>& y_pred,
                                 std::size_t k) {
  std::vector<Recount> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool predicted = y_pred[i] == c;
      const bool actual = y_true[i] == c;
      if (predicted && actual) ++out[c].tp;
      else if (predicted) ++out[c].fp;
      else if (actual) ++out[c].fn;
      else ++out[c].tn;
    }
  }
  return out;
}

double ratio(double a, double b) { return b == 0 ? 0.0 : a / b; }
double harmonic(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

TEST(ConfusionTest, IdenticalLabelsGiveDiagonal) {
  const std::vector<std::size_t> y{0, 1, 2, 2, 1, 0, 0};
  const auto cm = confusion(y, y, 3);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t a = 0; a < 3; ++a) {
      if (p != a) EXPECT_EQ(cm.cell(p, a), 0u);
    }
  }
  EXPECT_EQ(cm.trace(), y.size());
  EXPECT_DOUBLE_EQ(metrics(cm).accuracy, 1.0);
}

TEST(ConfusionTest, CellRolesForClassTwoOfThree) {
  // cell(p, a): rows are predictions, columns are actual classes.
  ConfusionMatrix cm(3);
  const std::uint64_t counts[3][3] = {{5, 1, 2}, {3, 7, 4}, {6, 8, 9}};
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t a = 0; a < 3; ++a) cm.add(p, a, counts[p][a]);
  }
  const std::size_t c = 1;
  EXPECT_EQ(cm.tp(c), 7u);
  EXPECT_EQ(cm.fp(c), 3u + 4u);     // rest of predicted row
  EXPECT_EQ(cm.fn(c), 1u + 8u);     // rest of actual column
  EXPECT_EQ(cm.tn(c), 5u + 2u + 6u + 9u);
  EXPECT_EQ(cm.total(), 45u);
}

TEST(ConfusionTest, LengthMismatchThrows) {
  const std::vector<std::size_t> a{0, 1}, b{0};
  EXPECT_THROW(confusion(a, b, 2), ShapeError);
}

TEST(ConfusionTest, LabelOutOfRangeThrows) {
  const std::vector<std::size_t> a{0, 3}, b{0, 1};
  EXPECT_THROW(confusion(a, b, 2), InvalidArgument);
}

TEST(MetricsTest, MatchesBruteForceOnRandomInstances) {
  Rng rng(20240611);
  for (int instance = 0; instance < 100; ++instance) {
    const std::size_t n = 1 + rng.uniform_index(500);
    const std::size_t k = 2 + rng.uniform_index(14);
    std::vector<std::size_t> y_true(n), y_pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      y_true[i] = rng.uniform_index(k);
      y_pred[i] = rng.uniform() < 0.6 ? y_true[i] : rng.uniform_index(k);
    }
    const auto report = metrics(confusion(y_true, y_pred, k));
    const auto oracle = brute_force(y_true, y_pred, k);
    ASSERT_EQ(report.per_class.size(), k);
    EXPECT_EQ(report.items, n);

    double sum_p = 0, sum_r = 0, sum_f = 0;
    std::uint64_t sum_tp = 0, sum_fp = 0, sum_fn = 0, correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += y_true[i] == y_pred[i];
    for (std::size_t c = 0; c < k; ++c) {
      const auto& m = report.per_class[c];
      const auto& o = oracle[c];
      ASSERT_EQ(m.tp, o.tp);
      ASSERT_EQ(m.tn, o.tn);
      ASSERT_EQ(m.fp, o.fp);
      ASSERT_EQ(m.fn, o.fn);
      ASSERT_EQ(m.tp + m.tn + m.fp + m.fn, n);
      const double p = ratio(static_cast<double>(o.tp), static_cast<double>(o.tp + o.fp));
      const double r = ratio(static_cast<double>(o.tp), static_cast<double>(o.tp + o.fn));
      EXPECT_NEAR(m.precision, p, 1e-12);
      EXPECT_NEAR(m.recall, r, 1e-12);
      EXPECT_NEAR(m.f1, harmonic(p, r), 1e-12);
      EXPECT_NEAR(m.accuracy, static_cast<double>(o.tp + o.tn) / static_cast<double>(n), 1e-12);
      sum_p += p;
      sum_r += r;
      sum_f += harmonic(p, r);
      sum_tp += o.tp;
      sum_fp += o.fp;
      sum_fn += o.fn;
    }
    const auto kd = static_cast<double>(k);
    EXPECT_NEAR(report.macro_precision, sum_p / kd, 1e-12);
    EXPECT_NEAR(report.macro_recall, sum_r / kd, 1e-12);
    EXPECT_NEAR(report.macro_f1, sum_f / kd, 1e-12);
    const double micro_p = ratio(static_cast<double>(sum_tp), static_cast<double>(sum_tp + sum_fp));
    const double micro_r = ratio(static_cast<double>(sum_tp), static_cast<double>(sum_tp + sum_fn));
    EXPECT_NEAR(report.micro_precision, micro_p, 1e-12);
    EXPECT_NEAR(report.micro_recall, micro_r, 1e-12);
    EXPECT_NEAR(report.micro_f1, harmonic(micro_p, micro_r), 1e-12);
    EXPECT_NEAR(report.accuracy, static_cast<double>(correct) / static_cast<double>(n), 1e-12);

    EXPECT_EQ(report.micro_precision, report.micro_recall);
    EXPECT_EQ(report.micro_precision, report.micro_f1);
  }
}

TEST(MetricsTest, DerivedSpotValue) {
  ConfusionMatrix cm(2);
  cm.add(0, 0, 8);  // TP for class 0
  cm.add(0, 1, 2);  // FP
  cm.add(1, 0, 4);  // FN
  cm.add(1, 1, 6);
  const auto m = metrics(cm).per_class[0];
  EXPECT_DOUBLE_EQ(m.precision, 0.8);
  EXPECT_NEAR(m.recall, 0.6667, 5e-5);
  EXPECT_NEAR(m.f1, 0.7273, 5e-5);
}

TEST(MetricsTest, HarmonicMeanFixedPoint) {
  for (double p : {0.0, 0.1, 0.25, 0.5, 0.8333, 1.0}) EXPECT_EQ(f1_score(p, p), p);
}

TEST(MetricsTest, TrivialRejector) {
  // 1000 items, 10 positives (class 1), everything predicted negative.
  std::vector<std::size_t> y_true(1000, 0), y_pred(1000, 0);
  for (std::size_t i = 0; i < 10; ++i) y_true[i * 97] = 1;
  const auto r = metrics(confusion(y_true, y_pred, 2));
  EXPECT_EQ(r.accuracy, 0.99);
  EXPECT_EQ(r.per_class[1].f1, 0.0);
  EXPECT_EQ(r.per_class[1].precision, 0.0);
  EXPECT_EQ(r.per_class[1].recall, 0.0);
}

TEST(MetricsTest, F1BoundedByTwiceMinimum) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform(), r = rng.uniform();
    const double f = f1_score(p, r);
    EXPECT_DOUBLE_EQ(f, f1_score(r, p));
    EXPECT_LE(f, 2 * std::min(p, r) + 1e-15);
  }
}

TEST(MetricsTest, BalancedSymmetricErrorsMakeMacroEqualMicro) {
  // Every class has 20 items; each class loses 4 items to the next class.
  std::vector<std::size_t> y_true, y_pred;
  const std::size_t k = 4;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < 20; ++i) {
      y_true.push_back(c);
      y_pred.push_back(i < 4 ? (c + 1) % k : c);
    }
  }
  const auto r = metrics(confusion(y_true, y_pred, k));
  EXPECT_NEAR(r.macro_f1, r.micro_f1, 1e-12);
  EXPECT_NEAR(r.micro_f1, 0.8, 1e-12);
}

TEST(MetricsTest, EmptyMatrixIsAllZero) {
  const auto r = metrics(ConfusionMatrix(3));
  EXPECT_EQ(r.items, 0u);
  EXPECT_EQ(r.accuracy, 0.0);
  EXPECT_EQ(r.macro_f1, 0.0);
  EXPECT_EQ(r.micro_f1, 0.0);
}

TEST(MetricsTest, MultiLabelIndicatorCounts) {
  nn::Tensor<float> y_true({3, 3}, {1, 0, 1, 0, 1, 0, 1, 1, 0});
  nn::Tensor<float> y_pred({3, 3}, {1, 0, 0, 0, 1, 0, 1, 1, 1});
  const auto r = metrics(y_true, y_pred);
  EXPECT_EQ(r.per_class[0].tp, 2u);
  EXPECT_EQ(r.per_class[2].fn, 1u);
  EXPECT_EQ(r.per_class[2].fp, 1u);
  EXPECT_EQ(r.per_class[2].tn, 1u);
  EXPECT_NEAR(r.accuracy, 1.0 / 3.0, 1e-12);
}

TEST(BinarizeTest, MultiClassArgmax) {
  nn::Tensor<float> probs({1, 3}, {0.1f, 0.7f, 0.2f});
  EXPECT_EQ(binarize(probs, LabelMode::multi_class), (std::vector<std::vector<std::size_t>>{{1}}));
}

TEST(BinarizeTest, TieGoesToLowestIndex) {
  nn::Tensor<float> probs({1, 2}, {0.5f, 0.5f});
  EXPECT_EQ(binarize(probs, LabelMode::multi_class), (std::vector<std::vector<std::size_t>>{{0}}));
}

TEST(BinarizeTest, MultiLabelThreshold) {
  nn::Tensor<float> probs({1, 3}, {0.6f, 0.4f, 0.9f});
  EXPECT_EQ(binarize(probs, LabelMode::multi_label, 0.5), (std::vector<std::vector<std::size_t>>{{0, 2}}));
  nn::Tensor<float> edge({1, 2}, {0.5f, 0.49f});
  EXPECT_EQ(binarize(edge, LabelMode::multi_label, 0.5), (std::vector<std::vector<std::size_t>>{{0}}));
}

TEST(BinarizeTest, IndicatorRoundTrip) {
  const std::vector<std::vector<std::size_t>> labels{{0, 2}, {}, {1}};
  const auto y = to_indicator(labels, 3);
  EXPECT_EQ(binarize(y, LabelMode::multi_label), labels);
}

TEST(LabelModeTest, ParsesNames) {
  EXPECT_EQ(parse_label_mode("multi_class"), LabelMode::multi_class);
  EXPECT_EQ(parse_label_mode("multi_label"), LabelMode::multi_label);
  EXPECT_EQ(label_mode_name(LabelMode::multi_label), "multi_label");
  EXPECT_THROW(parse_label_mode("both"), InvalidArgument);
}

}  // namespace
}  // namespace doccat::eval
