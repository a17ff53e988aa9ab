#pragma once

#include <string>
#include <string_view>

#include "doccat/nn/tensor.hpp"

namespace doccat::nn {

enum class ActivationType { tanh, sigmoid, softmax, relu, leaky_relu };

struct ActivationKind {
  static constexpr double kDefaultLeakySlope = 0.3;

  ActivationType type = ActivationType::leaky_relu;
  double slope = kDefaultLeakySlope;  // only meaningful for leaky_relu

  static ActivationKind tanh() { return {ActivationType::tanh, 0.0}; }
  static ActivationKind sigmoid() { return {ActivationType::sigmoid, 0.0}; }
  static ActivationKind softmax() { return {ActivationType::softmax, 0.0}; }
  static ActivationKind relu() { return {ActivationType::relu, 0.0}; }
  static ActivationKind leaky_relu(double slope = kDefaultLeakySlope);

  friend bool operator==(const ActivationKind&, const ActivationKind&) = default;
};

/// Accepts "tanh", "sigmoid", "softmax", "relu", "leakyrelu" / "leaky_relu".
ActivationKind parse_activation(std::string_view name, double leaky_slope = ActivationKind::kDefaultLeakySlope);
std::string activation_name(const ActivationKind& kind);

/// Element-wise activation; softmax is applied per row of a (batch x K)
/// tensor and throws ShapeError on any other rank.
template <typename T>
Tensor<T> activate(const ActivationKind& kind, const Tensor<T>& x);

/// Gradient with respect to the activation input, given its input x, its
/// output a = activate(kind, x) and the gradient with respect to a.
template <typename T>
Tensor<T> activation_backward(const ActivationKind& kind, const Tensor<T>& x, const Tensor<T>& a,
                              const Tensor<T>& grad_a);

}  // namespace doccat::nn
