#pragma once

#include <cstddef>
#include <cstdint>

#include "doccat/nn/network.hpp"

namespace doccat::nn {

struct GradientCheckOptions {
  double epsilon = 1e-4;
  /// Combine central differences at epsilon and epsilon/2 (Richardson), which
  /// cancels the O(eps^2) truncation term and allows a larger, rounding-safe
  /// step.
  bool extrapolate = true;
  /// Denominator floor for the relative error, so entries whose true
  /// gradient is below the resolution of T are compared absolutely.
  /// Negative selects the default for T: 1e-4 for float, 1e-6 for double.
  double floor = -1.0;
  std::uint64_t seed = 0;  // dropout masks; identical for every evaluation
  /// Check at most this many entries per parameter tensor (0 = all).
  std::size_t max_entries = 0;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameter = 0;  // index into Network::parameters()
  std::size_t entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Central differences (E(p + eps) - E(p - eps)) / (2 eps) against
/// Network::backward(), entry by entry. The finite differences are taken on
/// an extended-precision (long double) copy of the network with the loss
/// accumulated in long double, so the check measures the error of the
/// analytic gradient rather than rounding in the oracle.
/// Every evaluation runs in train mode with a fresh Rng(seed), so dropout
/// masks are identical across all passes.
template <typename T>
GradientCheckResult gradient_check(const Network<T>& net, const Tensor<T>& x, const Tensor<T>& y, LossKind kind,
                                   const GradientCheckOptions& options = {});

}  // namespace doccat::nn
