#include <gtest/gtest.h>

#include <cmath>

#include "doccat/nn/network.hpp"
#include "support/random_nets.hpp"

using namespace doccat::nn;

TEST(Network, RejectsForwardReferences) {
  Network<double> net(Shape{3});
  EXPECT_THROW(net.add(std::make_unique<Dense<double>>(3, 2), NodeId{1}), doccat::InvalidArgument);
}

TEST(Network, RejectsIncompatibleShapes) {
  Network<double> net(Shape{3});
  net.add(std::make_unique<Dense<double>>(3, 2), Network<double>::input());
  EXPECT_THROW(net.add(std::make_unique<Dense<double>>(3, 2), NodeId{1}), doccat::ShapeError);
}

TEST(Network, LossPairingEnforced) {
  Network<double> net(Shape{2});
  auto d = net.add(std::make_unique<Dense<double>>(2, 2), Network<double>::input());
  net.add(std::make_unique<Activation<double>>(ActivationKind::sigmoid()), d);
  EXPECT_THROW(check_loss_pairing(net, LossKind::categorical_cross_entropy), doccat::InvalidArgument);
  EXPECT_NO_THROW(check_loss_pairing(net, LossKind::binary_cross_entropy));
  EXPECT_NO_THROW(check_loss_pairing(net, LossKind::quadratic));
}

TEST(Network, ZeroWeightDenseQuadraticGradient) {
  // a = W x + b with W = 0, b = 0 -> a = 0; E = 1/2 mean_n sum_i (y - a)^2
  // dE/dW[i][j] = mean_n (a_i - y_i) x_j = -mean_n y_i x_j
  Network<double> net(Shape{2});
  net.add(std::make_unique<Dense<double>>(2, 2), Network<double>::input());
  Tensor<double> x(Shape{2, 2}, std::vector<double>{1, 2, 3, 4});
  Tensor<double> y(Shape{2, 2}, std::vector<double>{1, 0, 0, 1});
  auto g = backward(net, x, y, LossKind::quadratic, nullptr);
  ASSERT_EQ(g.params.size(), 2u);
  const std::vector<double> dw = {-(1 * 1 + 0 * 3) / 2.0, -(1 * 2 + 0 * 4) / 2.0, -(0 * 1 + 1 * 3) / 2.0,
                                  -(0 * 2 + 1 * 4) / 2.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(g.params[0][i], dw[i]);
  EXPECT_DOUBLE_EQ(g.params[1][0], -0.5);
  EXPECT_DOUBLE_EQ(g.params[1][1], -0.5);
  EXPECT_DOUBLE_EQ(g.loss, 0.5 * (1 + 1) / 2.0);
}

TEST(Network, SigmoidBinaryCrossEntropyClosedForm) {
  doccat::Rng rng(19);
  const std::size_t in = 5, k = 3, batch = 7;
  Network<double> net(Shape{in});
  auto d = net.add(std::make_unique<Dense<double>>(in, k), Network<double>::input());
  net.add(std::make_unique<Activation<double>>(ActivationKind::sigmoid()), d);
  net.initialize(rng);
  auto x = doccat::testing::random_tensor<double>({batch, in}, rng);
  auto y = doccat::testing::random_targets<double>(batch, k, LossKind::binary_cross_entropy, rng);
  auto a = net.predict(x);
  auto g = backward(net, x, y, LossKind::binary_cross_entropy, nullptr);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < in; ++j) {
      double expected = 0;
      for (std::size_t n = 0; n < batch; ++n) expected += x.at(n, j) * (a.at(n, i) - y.at(n, i));
      expected /= batch;
      EXPECT_NEAR(g.params[0].at(i, j), expected, 1e-9);
    }
  }
}

TEST(Network, TwoClassSoftmaxEqualsSigmoid) {
  // softmax([z, 0]) = [sigmoid(z), 1 - sigmoid(z)]
  doccat::Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const double z = rng.uniform(-8, 8);
    const double y1 = rng.uniform() < 0.5 ? 1.0 : 0.0;
    Network<double> sig(Shape{1});
    auto d1 = sig.add(std::make_unique<Dense<double>>(1, 1), Network<double>::input());
    sig.add(std::make_unique<Activation<double>>(ActivationKind::sigmoid()), d1);
    Network<double> soft(Shape{1});
    auto d2 = soft.add(std::make_unique<Dense<double>>(1, 2), Network<double>::input());
    soft.add(std::make_unique<Activation<double>>(ActivationKind::softmax()), d2);
    sig.parameters()[0]->values()[0] = z;
    soft.parameters()[0]->values()[0] = z;
    Tensor<double> x(Shape{1, 1}, 1.0);
    auto a1 = sig.predict(x);
    auto a2 = soft.predict(x);
    ASSERT_NEAR(a2[0], a1[0], 1e-12);
    ASSERT_NEAR(a2[1], 1 - a1[0], 1e-12);
    const double e1 = loss(LossKind::binary_cross_entropy, Tensor<double>(Shape{1, 1}, y1), a1);
    const double e2 =
        loss(LossKind::categorical_cross_entropy, Tensor<double>(Shape{1, 2}, std::vector<double>{y1, 1 - y1}), a2);
    EXPECT_NEAR(e1, e2, 1e-9);
  }
}

TEST(Network, CopyIsDeep) {
  auto c = doccat::testing::random_net_case<double>(1, 3);
  Network<double> copy = c.net;
  copy.parameters()[0]->fill(0.0);
  EXPECT_NE(*c.net.parameters()[0], *copy.parameters()[0]);
}

TEST(Network, CastPreservesPredictions) {
  auto c = doccat::testing::random_net_case<float>(0, 5);
  auto d = c.net.cast<double>();
  auto pf = c.net.predict(c.x);
  auto pd = d.predict(c.x.cast<double>());
  for (std::size_t i = 0; i < pf.size(); ++i) EXPECT_NEAR(pf[i], pd[i], 1e-5);
}

TEST(Network, EvalPredictionIsDeterministic) {
  auto c = doccat::testing::random_net_case<float>(2, 9);
  EXPECT_EQ(c.net.predict(c.x), c.net.predict(c.x));
}
