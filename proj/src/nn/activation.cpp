#include "doccat/nn/activation.hpp"

#include <cmath>
#include <type_traits>

namespace doccat::nn {

ActivationKind ActivationKind::leaky_relu(double slope) {
  if (!(slope > 0.0)) throw InvalidArgument("leaky_relu slope must be positive");
  return {ActivationType::leaky_relu, slope};
}

ActivationKind parse_activation(std::string_view name, double leaky_slope) {
  if (name == "tanh") return ActivationKind::tanh();
  if (name == "sigmoid") return ActivationKind::sigmoid();
  if (name == "softmax") return ActivationKind::softmax();
  if (name == "relu") return ActivationKind::relu();
  if (name == "leakyrelu" || name == "leaky_relu") return ActivationKind::leaky_relu(leaky_slope);
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

std::string activation_name(const ActivationKind& kind) {
  switch (kind.type) {
    case ActivationType::tanh: return "tanh";
    case ActivationType::sigmoid: return "sigmoid";
    case ActivationType::softmax: return "softmax";
    case ActivationType::relu: return "relu";
    case ActivationType::leaky_relu: return "leakyrelu";
  }
  return "unknown";
}

namespace {

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
void softmax_rows(const Tensor<T>& x, Tensor<T>& out) {
  if (x.rank() != 2) {
    throw ShapeError("softmax expects a (batch x K) tensor, got " + to_string(x.shape()));
  }
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = x.data() + r * cols;
    T* o = out.data() + r * cols;
    T peak = in[0];
    for (std::size_t c = 1; c < cols; ++c) peak = std::max(peak, in[c]);
    std::common_type_t<T, double> total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      o[c] = std::exp(in[c] - peak);
      total += o[c];
    }
    for (std::size_t c = 0; c < cols; ++c) o[c] = static_cast<T>(o[c] / total);
  }
}

}  // namespace

template <typename T>
Tensor<T> activate(const ActivationKind& kind, const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  const std::size_t n = x.size();
  const T* in = x.data();
  T* o = out.data();
  switch (kind.type) {
    case ActivationType::tanh:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::tanh(in[i]);
      break;
    case ActivationType::sigmoid:
      for (std::size_t i = 0; i < n; ++i) o[i] = stable_sigmoid(in[i]);
      break;
    case ActivationType::softmax:
      softmax_rows(x, out);
      break;
    case ActivationType::relu:
      for (std::size_t i = 0; i < n; ++i) o[i] = in[i] > T{0} ? in[i] : T{0};
      break;
    case ActivationType::leaky_relu: {
      const auto slope = static_cast<T>(kind.slope);
      for (std::size_t i = 0; i < n; ++i) o[i] = in[i] >= T{0} ? in[i] : slope * in[i];
      break;
    }
  }
  return out;
}

template <typename T>
Tensor<T> activation_backward(const ActivationKind& kind, const Tensor<T>& x, const Tensor<T>& a,
                              const Tensor<T>& grad_a) {
  if (grad_a.shape() != a.shape() || x.shape() != a.shape()) {
    throw ShapeError("activation gradient shape mismatch");
  }
  Tensor<T> grad(x.shape());
  const std::size_t n = x.size();
  const T* g = grad_a.data();
  const T* out = a.data();
  const T* in = x.data();
  T* d = grad.data();
  switch (kind.type) {
    case ActivationType::tanh:
      for (std::size_t i = 0; i < n; ++i) d[i] = g[i] * (T{1} - out[i] * out[i]);
      break;
    case ActivationType::sigmoid:
      for (std::size_t i = 0; i < n; ++i) d[i] = g[i] * out[i] * (T{1} - out[i]);
      break;
    case ActivationType::softmax: {
      // Row-wise Jacobian-vector product: a * (g - <g, a>).
      const std::size_t rows = a.dim(0);
      const std::size_t cols = a.dim(1);
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * out[r * cols + c];
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t i = r * cols + c;
          d[i] = static_cast<T>(out[i] * (g[i] - dot));
        }
      }
      break;
    }
    case ActivationType::relu:
      for (std::size_t i = 0; i < n; ++i) d[i] = in[i] > T{0} ? g[i] : T{0};
      break;
    case ActivationType::leaky_relu: {
      const auto slope = static_cast<T>(kind.slope);
      for (std::size_t i = 0; i < n; ++i) d[i] = in[i] >= T{0} ? g[i] : slope * g[i];
      break;
    }
  }
  return grad;
}

template Tensor<float> activate(const ActivationKind&, const Tensor<float>&);
template Tensor<double> activate(const ActivationKind&, const Tensor<double>&);
template Tensor<float> activation_backward(const ActivationKind&, const Tensor<float>&, const Tensor<float>&,
                                           const Tensor<float>&);
template Tensor<double> activation_backward(const ActivationKind&, const Tensor<double>&,
                                            const Tensor<double>&, const Tensor<double>&);
template Tensor<long double> activate(const ActivationKind&, const Tensor<long double>&);
template Tensor<long double> activation_backward(const ActivationKind&, const Tensor<long double>&,
                                                 const Tensor<long double>&, const Tensor<long double>&);

}  // namespace doccat::nn
