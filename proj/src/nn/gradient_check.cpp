#include "doccat/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace doccat::nn {

namespace {

using Ext = long double;

Ext reference_loss(LossKind kind, const Tensor<Ext>& y, const Tensor<Ext>& a) {
  const Ext clip_lo = kLogClip;
  const Ext clip_hi = 1.0L - kLogClip;
  Ext total = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Ext p = std::clamp(a[i], clip_lo, clip_hi);
    switch (kind) {
      case LossKind::quadratic: total += 0.5L * (y[i] - a[i]) * (y[i] - a[i]); break;
      case LossKind::binary_cross_entropy: total -= y[i] * std::log(p) + (1 - y[i]) * std::log(1 - p); break;
      case LossKind::categorical_cross_entropy: total -= y[i] * std::log(p); break;
    }
  }
  return total / static_cast<Ext>(y.dim(0));
}

}  // namespace

template <typename T>
GradientCheckResult gradient_check(const Network<T>& net, const Tensor<T>& x, const Tensor<T>& y, LossKind kind,
                                   const GradientCheckOptions& options) {
  Rng rng(options.seed);
  const Gradients<T> analytic = backward(net, x, y, kind, &rng);

  Network<Ext> ref = net.template cast<Ext>();
  const Tensor<Ext> xd = x.template cast<Ext>();
  const Tensor<Ext> yd = y.template cast<Ext>();
  auto eval_loss = [&] {
    Rng r(options.seed);
    const auto pass = ref.forward(xd, Mode::train, &r);
    return reference_loss(kind, yd, pass.output(ref.output()));
  };
  const double floor = options.floor >= 0 ? options.floor : (sizeof(T) == 4 ? 1e-4 : 1e-6);

  GradientCheckResult result;
  auto params = ref.parameters();
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<Ext>& p = *params[pi];
    std::size_t count = p.size();
    std::size_t stride = 1;
    if (options.max_entries && count > options.max_entries) {
      stride = (count + options.max_entries - 1) / options.max_entries;
    }
    for (std::size_t k = 0; k < count; k += stride) {
      const Ext saved = p[k];
      auto central = [&](Ext h) {
        p[k] = saved + h;
        const Ext plus = eval_loss();
        p[k] = saved - h;
        const Ext minus = eval_loss();
        p[k] = saved;
        return (plus - minus) / (2 * h);
      };
      const Ext coarse = central(options.epsilon);
      const auto numeric = static_cast<double>(
          options.extrapolate ? (4 * central(0.5L * options.epsilon) - coarse) / 3 : coarse);
      const double a = analytic.params[pi][k];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double err = std::abs(a - numeric) / denom;
      ++result.checked;
      if (err > result.max_relative_error || !std::isfinite(err)) {
        result.max_relative_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
        result.parameter = pi;
        result.entry = k;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

template GradientCheckResult gradient_check(const Network<float>&, const Tensor<float>&, const Tensor<float>&,
                                            LossKind, const GradientCheckOptions&);
template GradientCheckResult gradient_check(const Network<double>&, const Tensor<double>&, const Tensor<double>&,
                                            LossKind, const GradientCheckOptions&);

}  // namespace doccat::nn
