#include "doccat/nn/adam.hpp"

#include <cmath>

namespace doccat::nn {

template <typename T>
AdamState<T>::AdamState(AdamConfig config) : config_(config) {
  if (!(config.alpha > 0.0) || config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 ||
      config.beta2 >= 1.0 || !(config.epsilon > 0.0)) {
    throw InvalidArgument("invalid Adam hyperparameters");
  }
}

template <typename T>
void AdamState<T>::step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }
  if (m_.size() != params.size()) throw ShapeError("adam: parameter count changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape() || m_[i].shape() != grads[i].shape()) {
      throw ShapeError("adam: shape mismatch for parameter " + std::to_string(i));
    }
  }

  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i]->data();
    T* m = m_[i].data();
    T* v = v_[i].data();
    const T* g = grads[i].data();
    for (std::size_t k = 0; k < grads[i].size(); ++k) {
      const double gk = g[k];
      const double mk = b1 * m[k] + (1.0 - b1) * gk;
      const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double update = config_.alpha * (mk / c1) / (std::sqrt(vk / c2) + config_.epsilon);
      p[k] = static_cast<T>(p[k] - update);
    }
  }
}

template class AdamState<float>;
template class AdamState<double>;

}  // namespace doccat::nn
