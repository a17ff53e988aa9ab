#pragma once

#include <string>
#include <string_view>

#include "doccat/nn/tensor.hpp"

namespace doccat::nn {

enum class LossKind { quadratic, binary_cross_entropy, categorical_cross_entropy };

/// Predictions are clipped into [kLogClip, 1 - kLogClip] before any log.
inline constexpr double kLogClip = 1e-7;

LossKind parse_loss(std::string_view name);
std::string loss_name(LossKind kind);

/// Batch loss for (batch x K) targets and predictions.
///
///   quadratic:                 1/2 * mean_n sum_i (y - a)^2
///   binary_cross_entropy:      -mean_n sum_i [y ln a + (1 - y) ln(1 - a)]
///   categorical_cross_entropy: -mean_n sum_i y ln a
template <typename T>
double loss(LossKind kind, const Tensor<T>& y_true, const Tensor<T>& y_pred);

/// dLoss/dPrediction with the same normalization as loss().
template <typename T>
Tensor<T> loss_gradient(LossKind kind, const Tensor<T>& y_true, const Tensor<T>& y_pred);

}  // namespace doccat::nn
