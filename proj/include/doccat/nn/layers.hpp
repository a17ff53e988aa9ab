#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doccat/common/random.hpp"
#include "doccat/nn/activation.hpp"
#include "doccat/nn/tensor.hpp"

namespace doccat::nn {

enum class Mode { train, eval };

enum class LayerType { dense, conv1d, max_over_time, dropout, activation, concat };

std::string layer_type_name(LayerType type);

/// Per-pass scratch a layer needs for its backward step (dropout masks,
/// pooling argmax positions). Owned by the forward pass, never by the layer,
/// so a frozen network can be evaluated from several threads at once.
template <typename T>
struct LayerCache {
  Tensor<T> mask;
  std::vector<std::uint32_t> argmax;
};

struct ForwardContext {
  Mode mode = Mode::eval;
  Rng* rng = nullptr;  // required for train-mode dropout with rate > 0
};

/// A node operation in a Network. Tensors passed to forward/backward carry
/// a leading batch extent; shapes reported by output_shape() do not.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerType type() const = 0;
  virtual std::size_t input_count() const { return 1; }

  /// Per-sample output shape; throws ShapeError when the inputs do not fit.
  virtual Shape output_shape(std::span<const Shape> inputs) const = 0;

  virtual Tensor<T> forward(std::span<const Tensor<T>* const> inputs, const ForwardContext& ctx,
                            LayerCache<T>* cache) const = 0;

  /// Returns dLoss/dInput for every input (empty tensors when
  /// input_grads is false); accumulates parameter gradients into grad_params
  /// (aligned with parameters()).
  virtual std::vector<Tensor<T>> backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>& output,
                                          const Tensor<T>& grad_output, const LayerCache<T>& cache,
                                          std::span<Tensor<T>> grad_params, bool input_grads = true) const = 0;

  virtual std::span<Tensor<T>> parameters() { return {}; }
  virtual std::span<const Tensor<T>> parameters() const { return {}; }

  /// Glorot-uniform weights, zero biases. No-op for parameterless layers.
  virtual void initialize(Rng& /*rng*/) {}

  /// Structural description (no parameter values).
  virtual nlohmann::json config() const = 0;

  virtual std::unique_ptr<Layer> clone() const = 0;
};

/// Fully connected: out[n, i] = sum_j x[n, j] * W[i, j] + b[i].
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in, std::size_t out);

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Tensor<T>& weights() { return params_[0]; }
  const Tensor<T>& weights() const { return params_[0]; }
  Tensor<T>& bias() { return params_[1]; }
  const Tensor<T>& bias() const { return params_[1]; }

  LayerType type() const override { return LayerType::dense; }
  Shape output_shape(std::span<const Shape> inputs) const override;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, const ForwardContext& ctx,
                    LayerCache<T>* cache) const override;
  std::vector<Tensor<T>> backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>& output,
                                  const Tensor<T>& grad_output, const LayerCache<T>& cache,
                                  std::span<Tensor<T>> grad_params, bool input_grads = true) const override;
  std::span<Tensor<T>> parameters() override { return params_; }
  std::span<const Tensor<T>> parameters() const override { return params_; }
  void initialize(Rng& rng) override;
  nlohmann::json config() const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }

 private:
  std::size_t in_;
  std::size_t out_;
  std::vector<Tensor<T>> params_;  // W (out x in), b (out)
};

/// 1-D valid convolution over a (timesteps x dim) sequence. Each filter spans
/// filter_len whole rows; stride 1; output length timesteps - filter_len + 1.
template <typename T>
class Conv1D final : public Layer<T> {
 public:
  Conv1D(std::size_t filter_count, std::size_t filter_len, std::size_t dim);

  std::size_t filter_count() const { return count_; }
  std::size_t filter_len() const { return len_; }
  std::size_t dim() const { return dim_; }
  Tensor<T>& filters() { return params_[0]; }
  const Tensor<T>& filters() const { return params_[0]; }
  Tensor<T>& bias() { return params_[1]; }
  const Tensor<T>& bias() const { return params_[1]; }

  LayerType type() const override { return LayerType::conv1d; }
  Shape output_shape(std::span<const Shape> inputs) const override;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, const ForwardContext& ctx,
                    LayerCache<T>* cache) const override;
  std::vector<Tensor<T>> backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>& output,
                                  const Tensor<T>& grad_output, const LayerCache<T>& cache,
                                  std::span<Tensor<T>> grad_params, bool input_grads = true) const override;
  std::span<Tensor<T>> parameters() override { return params_; }
  std::span<const Tensor<T>> parameters() const override { return params_; }
  void initialize(Rng& rng) override;
  nlohmann::json config() const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv1D>(*this); }

 private:
  std::size_t count_;
  std::size_t len_;
  std::size_t dim_;
  std::vector<Tensor<T>> params_;  // filters (count x len*dim), b (count)
};

/// Per-channel maximum over all positions: (L x C) -> (C). Ties resolve to
/// the first position, and backward routes gradient to that position only.
template <typename T>
class MaxOverTime final : public Layer<T> {
 public:
  LayerType type() const override { return LayerType::max_over_time; }
  Shape output_shape(std::span<const Shape> inputs) const override;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, const ForwardContext& ctx,
                    LayerCache<T>* cache) const override;
  std::vector<Tensor<T>> backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>& output,
                                  const Tensor<T>& grad_output, const LayerCache<T>& cache,
                                  std::span<Tensor<T>> grad_params, bool input_grads = true) const override;
  nlohmann::json config() const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxOverTime>(*this); }
};

/// Inverted dropout: in train mode each component is zeroed with probability
/// rate and survivors are scaled by 1/(1 - rate); identity in eval mode.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  explicit Dropout(double rate);

  double rate() const { return rate_; }

  LayerType type() const override { return LayerType::dropout; }
  Shape output_shape(std::span<const Shape> inputs) const override;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, const ForwardContext& ctx,
                    LayerCache<T>* cache) const override;
  std::vector<Tensor<T>> backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>& output,
                                  const Tensor<T>& grad_output, const LayerCache<T>& cache,
                                  std::span<Tensor<T>> grad_params, bool input_grads = true) const override;
  nlohmann::json config() const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }

 private:
  double rate_;
};

template <typename T>
class Activation final : public Layer<T> {
 public:
  explicit Activation(ActivationKind kind) : kind_(kind) {}

  const ActivationKind& kind() const { return kind_; }

  LayerType type() const override { return LayerType::activation; }
  Shape output_shape(std::span<const Shape> inputs) const override;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, const ForwardContext& ctx,
                    LayerCache<T>* cache) const override;
  std::vector<Tensor<T>> backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>& output,
                                  const Tensor<T>& grad_output, const LayerCache<T>& cache,
                                  std::span<Tensor<T>> grad_params, bool input_grads = true) const override;
  nlohmann::json config() const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Activation>(*this); }

 private:
  ActivationKind kind_;
};

/// Joins flat per-sample vectors end to end, in input order.
template <typename T>
class Concat final : public Layer<T> {
 public:
  explicit Concat(std::size_t inputs);

  LayerType type() const override { return LayerType::concat; }
  std::size_t input_count() const override { return inputs_; }
  Shape output_shape(std::span<const Shape> inputs) const override;
  Tensor<T> forward(std::span<const Tensor<T>* const> inputs, const ForwardContext& ctx,
                    LayerCache<T>* cache) const override;
  std::vector<Tensor<T>> backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>& output,
                                  const Tensor<T>& grad_output, const LayerCache<T>& cache,
                                  std::span<Tensor<T>> grad_params, bool input_grads = true) const override;
  nlohmann::json config() const override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Concat>(*this); }

 private:
  std::size_t inputs_;
};

/// Rebuilds a layer from config(); parameters are zero-initialized.
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const nlohmann::json& config);

// Single-sample conveniences matching the layer semantics above.

/// (batch x in) -> (batch x out)
template <typename T>
Tensor<T> dense_forward(const Dense<T>& layer, const Tensor<T>& x);

/// (L x dim) -> (L - f + 1 x count); throws InvalidArgument when L < f.
template <typename T>
Tensor<T> conv1d_forward(const Conv1D<T>& layer, const Tensor<T>& seq);

/// (L x count) -> (count); throws InvalidArgument on an empty sequence.
template <typename T>
Tensor<T> max_over_time(const Tensor<T>& seq);

template <typename T>
Tensor<T> dropout_forward(const Dropout<T>& layer, const Tensor<T>& x, Mode mode, Rng& rng);

}  // namespace doccat::nn
