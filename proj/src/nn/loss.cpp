#include "doccat/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace doccat::nn {

LossKind parse_loss(std::string_view name) {
  if (name == "quadratic") return LossKind::quadratic;
  if (name == "binary_cross_entropy") return LossKind::binary_cross_entropy;
  if (name == "categorical_cross_entropy") return LossKind::categorical_cross_entropy;
  throw InvalidArgument("unknown loss '" + std::string(name) + "'");
}

std::string loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::quadratic: return "quadratic";
    case LossKind::binary_cross_entropy: return "binary_cross_entropy";
    case LossKind::categorical_cross_entropy: return "categorical_cross_entropy";
  }
  return "unknown";
}

namespace {

template <typename T>
std::size_t batch_rows(const Tensor<T>& y_true, const Tensor<T>& y_pred) {
  if (y_true.shape() != y_pred.shape()) {
    throw ShapeError("loss shape mismatch: " + to_string(y_true.shape()) + " vs " +
                     to_string(y_pred.shape()));
  }
  if (y_true.rank() == 0) throw ShapeError("loss requires at least one dimension");
  return y_true.dim(0);
}

double clip(double a) { return std::clamp(a, kLogClip, 1.0 - kLogClip); }

}  // namespace

template <typename T>
double loss(LossKind kind, const Tensor<T>& y_true, const Tensor<T>& y_pred) {
  const std::size_t rows = batch_rows(y_true, y_pred);
  if (rows == 0) return 0.0;
  const std::size_t n = y_true.size();
  const T* y = y_true.data();
  const T* a = y_pred.data();
  double total = 0.0;
  switch (kind) {
    case LossKind::quadratic:
      for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(y[i]) - static_cast<double>(a[i]);
        total += 0.5 * d * d;
      }
      break;
    case LossKind::binary_cross_entropy:
      for (std::size_t i = 0; i < n; ++i) {
        const double p = clip(a[i]);
        total -= y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
      }
      break;
    case LossKind::categorical_cross_entropy:
      for (std::size_t i = 0; i < n; ++i) {
        if (y[i] != T{0}) total -= y[i] * std::log(clip(a[i]));
      }
      break;
  }
  return total / static_cast<double>(rows);
}

template <typename T>
Tensor<T> loss_gradient(LossKind kind, const Tensor<T>& y_true, const Tensor<T>& y_pred) {
  const std::size_t rows = batch_rows(y_true, y_pred);
  Tensor<T> grad(y_true.shape());
  if (rows == 0) return grad;
  const double scale = 1.0 / static_cast<double>(rows);
  const std::size_t n = y_true.size();
  const T* y = y_true.data();
  const T* a = y_pred.data();
  T* g = grad.data();
  switch (kind) {
    case LossKind::quadratic:
      for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<T>(scale * (static_cast<double>(a[i]) - y[i]));
      break;
    case LossKind::binary_cross_entropy:
      for (std::size_t i = 0; i < n; ++i) {
        const double p = clip(a[i]);
        g[i] = static_cast<T>(scale * (p - y[i]) / (p * (1.0 - p)));
      }
      break;
    case LossKind::categorical_cross_entropy:
      for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<T>(-scale * y[i] / clip(a[i]));
      break;
  }
  return grad;
}

template double loss(LossKind, const Tensor<float>&, const Tensor<float>&);
template double loss(LossKind, const Tensor<double>&, const Tensor<double>&);
template Tensor<float> loss_gradient(LossKind, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> loss_gradient(LossKind, const Tensor<double>&, const Tensor<double>&);
template double loss(LossKind, const Tensor<long double>&, const Tensor<long double>&);
template Tensor<long double> loss_gradient(LossKind, const Tensor<long double>&, const Tensor<long double>&);

}  // namespace doccat::nn
