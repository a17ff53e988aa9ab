#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "doccat/nn/tensor.hpp"

namespace doccat::nn {

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam optimizer state. Moments are created on the first step, shaped like
/// the parameters they track.
template <typename T>
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return steps_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }

  /// params[i] -= alpha * m_hat / (sqrt(v_hat) + epsilon), bias-corrected.
  void step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads);

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

template <typename T>
void adam_step(AdamState<T>& state, std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads) {
  state.step(params, grads);
}

}  // namespace doccat::nn
