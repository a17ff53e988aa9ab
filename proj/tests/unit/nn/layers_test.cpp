#include <gtest/gtest.h>

#include <numeric>

#include "doccat/nn/layers.hpp"

using namespace doccat::nn;

namespace {

Tensor<double> mat(std::size_t r, std::size_t c, std::vector<double> v) {
  return Tensor<double>(Shape{r, c}, std::move(v));
}

}  // namespace

TEST(Dense, IdentityWeights) {
  Dense<double> d(2, 2);
  d.weights() = mat(2, 2, {1, 0, 0, 1});
  auto out = dense_forward(d, mat(1, 2, {3, 4}));
  EXPECT_EQ(out, mat(1, 2, {3, 4}));
}

TEST(Dense, NetInput) {
  Dense<double> d(2, 1);
  d.weights() = mat(1, 2, {1, 2});
  d.bias()[0] = 1;
  EXPECT_EQ(dense_forward(d, mat(1, 2, {3, 4}))[0], 12.0);
}

TEST(Dense, ZeroWeightsYieldBias) {
  Dense<double> d(3, 2);
  d.bias() = Tensor<double>(Shape{2}, std::vector<double>{7, -1});
  auto out = dense_forward(d, mat(2, 3, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(out, mat(2, 2, {7, -1, 7, -1}));
}

TEST(Dense, ShapeMismatch) {
  Dense<double> d(3, 2);
  EXPECT_THROW(dense_forward(d, mat(1, 2, {1, 2})), doccat::ShapeError);
}

TEST(Conv1D, ProjectionFilterExtractsFirstComponent) {
  Conv1D<double> c(1, 1, 3);
  c.filters() = mat(1, 3, {1, 0, 0});
  auto seq = mat(4, 3, {1, 9, 9, 2, 9, 9, 3, 9, 9, 4, 9, 9});
  auto out = conv1d_forward(c, seq);
  EXPECT_EQ(out, mat(4, 1, {1, 2, 3, 4}));
}

TEST(Conv1D, ValidOutputLength) {
  Conv1D<double> c(2, 3, 2);
  auto out = conv1d_forward(c, Tensor<double>(Shape{5, 2}, 1.0));
  EXPECT_EQ(out.shape(), (Shape{3, 2}));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv1D, WindowDotProduct) {
  Conv1D<double> c(1, 2, 2);
  c.filters() = mat(1, 4, {1, 2, 3, 4});
  c.bias()[0] = 0.5;
  auto out = conv1d_forward(c, mat(3, 2, {1, 1, 2, 2, 3, 3}));
  // p=0: 1+2+6+8 = 17.5 ; p=1: 2+4+9+12 = 27.5
  EXPECT_EQ(out, mat(2, 1, {17.5, 27.5}));
}

TEST(Conv1D, SequenceTooShort) {
  Conv1D<double> c(1, 3, 2);
  EXPECT_THROW(conv1d_forward(c, Tensor<double>(Shape{2, 2})), doccat::InvalidArgument);
  std::vector<Shape> in{Shape{2, 2}};
  EXPECT_THROW(c.output_shape(in), doccat::InvalidArgument);
}

TEST(Conv1D, FilterWeightsSpanWholeVectors) {
  Conv1D<float> c(200, 3, 300);
  EXPECT_EQ(c.filters().shape(), (Shape{200, 900}));
  Conv1D<float> c5(1, 5, 300);
  EXPECT_EQ(c5.filters().size(), 1500u);
}

TEST(MaxOverTime, ElementWiseMax) {
  EXPECT_EQ(max_over_time(mat(3, 2, {1, 5, 3, 2, 0, 4})), Tensor<double>(Shape{2}, std::vector<double>{3, 5}));
}

TEST(MaxOverTime, SingleRowAndEqualRows) {
  EXPECT_EQ(max_over_time(mat(1, 3, {1, 2, 3})), Tensor<double>(Shape{3}, std::vector<double>{1, 2, 3}));
  EXPECT_EQ(max_over_time(mat(3, 2, {4, 5, 4, 5, 4, 5})), Tensor<double>(Shape{2}, std::vector<double>{4, 5}));
}

TEST(MaxOverTime, BackwardRoutesToFirstArgmax) {
  MaxOverTime<double> pool;
  Tensor<double> x(Shape{1, 4, 2}, std::vector<double>{1, 7, 3, 7, 3, 0, 2, 7});
  LayerCache<double> cache;
  const Tensor<double>* in[] = {&x};
  auto out = pool.forward(in, {}, &cache);
  Tensor<double> g(Shape{1, 2}, std::vector<double>{10, 20});
  auto grads = pool.backward(in, out, g, cache, {});
  EXPECT_EQ(grads[0], Tensor<double>(Shape{1, 4, 2}, std::vector<double>{0, 20, 10, 0, 0, 0, 0, 0}));
}

TEST(Dropout, RateZeroTrainIsIdentity) {
  Dropout<double> d(0.0);
  doccat::Rng rng(1);
  auto x = mat(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(dropout_forward(d, x, Mode::train, rng), x);
}

TEST(Dropout, EvalIsIdentity) {
  Dropout<double> d(0.7);
  doccat::Rng rng(1);
  auto x = mat(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(dropout_forward(d, x, Mode::eval, rng), x);
}

TEST(Dropout, TrainExpectationMatchesEval) {
  Dropout<double> d(0.5);
  doccat::Rng rng(42);
  Tensor<double> x(Shape{1, 100000}, 1.0);
  auto out = dropout_forward(d, x, Mode::train, rng);
  const double mean = std::accumulate(out.values().begin(), out.values().end(), 0.0) / out.size();
  EXPECT_NEAR(mean, 1.0, 0.02);
  for (double v : out.values()) EXPECT_TRUE(v == 0.0 || v == 2.0);
}

TEST(Dropout, RateMustBeBelowOne) {
  EXPECT_THROW(Dropout<double>(1.0), doccat::InvalidArgument);
  EXPECT_THROW(Dropout<double>(-0.1), doccat::InvalidArgument);
}

TEST(Concat, JoinsInOrder) {
  Concat<double> c(2);
  auto a = mat(2, 1, {1, 2});
  auto b = mat(2, 2, {3, 4, 5, 6});
  const Tensor<double>* in[] = {&a, &b};
  auto out = c.forward(in, {}, nullptr);
  EXPECT_EQ(out, mat(2, 3, {1, 3, 4, 2, 5, 6}));
}

TEST(Layers, ConfigRoundTrip) {
  Conv1D<float> c(4, 2, 3);
  auto copy = make_layer<float>(c.config());
  EXPECT_EQ(copy->config(), c.config());
  Activation<float> a(ActivationKind::leaky_relu(0.25));
  EXPECT_EQ(make_layer<float>(a.config())->config(), a.config());
  EXPECT_THROW(make_layer<float>(nlohmann::json{{"type", "lstm"}}), doccat::FormatError);
}

TEST(Layers, GlorotBounds) {
  Dense<double> d(30, 20);
  doccat::Rng rng(5);
  d.initialize(rng);
  const double limit = std::sqrt(6.0 / 50.0);
  for (double v : d.weights().values()) EXPECT_LE(std::abs(v), limit);
  for (double v : d.bias().values()) EXPECT_EQ(v, 0.0);
}
