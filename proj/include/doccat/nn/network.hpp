#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "doccat/nn/layers.hpp"
#include "doccat/nn/loss.hpp"

namespace doccat::nn {

using NodeId = std::size_t;

/// Activations and per-layer caches recorded by one forward pass.
template <typename T>
struct ForwardPass {
  Mode mode = Mode::eval;
  std::vector<Tensor<T>> outputs;  // indexed by NodeId; node 0 is the input
  std::vector<LayerCache<T>> caches;

  const Tensor<T>& output(NodeId id) const { return outputs.at(id); }
};

template <typename T>
struct Gradients {
  double loss = 0.0;
  std::vector<Tensor<T>> params;  // aligned with Network::parameters()
};

/// Directed acyclic graph of layers with a single input and a single output.
///
/// Nodes may only consume earlier nodes, so insertion order is a topological
/// order and cycles cannot be expressed. Forward and backward are const:
/// a network is mutated only through parameters() (optimizer steps,
/// initialization, loading), which makes concurrent inference on a frozen
/// network safe.
template <typename T>
class Network {
 public:
  /// input_shape is per sample, e.g. {timesteps, dim}.
  explicit Network(Shape input_shape);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  static constexpr NodeId input() { return 0; }

  /// Appends a node; validates that the layer accepts its inputs' shapes.
  NodeId add(std::unique_ptr<Layer<T>> layer, std::vector<NodeId> inputs);
  NodeId add(std::unique_ptr<Layer<T>> layer, NodeId input) {
    return add(std::move(layer), std::vector<NodeId>{input});
  }

  void set_output(NodeId id);
  NodeId output() const { return output_; }

  const Shape& input_shape() const { return shapes_.front(); }
  const Shape& output_shape() const { return shapes_.at(output_); }
  const Shape& node_shape(NodeId id) const { return shapes_.at(id); }

  std::size_t node_count() const { return nodes_.size() + 1; }
  /// Layer at a non-input node.
  const Layer<T>& layer(NodeId id) const;
  const std::vector<NodeId>& node_inputs(NodeId id) const;

  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }

  std::vector<Tensor<T>*> parameters();
  std::vector<const Tensor<T>*> parameters() const;
  std::size_t parameter_count() const;

  void initialize(Rng& rng);

  /// Full forward pass keeping everything backward() needs.
  ForwardPass<T> forward(const Tensor<T>& x, Mode mode, Rng* rng) const;

  /// Eval-mode forward; thread-safe on a shared const network.
  Tensor<T> predict(const Tensor<T>& x) const;

  /// Loss and parameter gradients for a recorded pass. When the output node
  /// is softmax with categorical cross-entropy, or sigmoid with binary
  /// cross-entropy, the output gradient is the fused (a - y) / batch.
  Gradients<T> backward(const ForwardPass<T>& pass, const Tensor<T>& y, LossKind kind) const;

  template <typename U>
  Network<U> cast() const;

 private:
  struct Node {
    std::unique_ptr<Layer<T>> layer;
    std::vector<NodeId> inputs;
  };

  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;  // nodes_[i] is NodeId i + 1
  std::vector<Shape> shapes_;
  NodeId output_ = 0;
  Mode mode_ = Mode::eval;
};

/// Throws InvalidArgument when kind is not allowed with the network's output
/// activation (categorical CE needs softmax, binary CE needs sigmoid).
template <typename T>
void check_loss_pairing(const Network<T>& net, LossKind kind);

/// One training-mode forward + backward over (x, y).
template <typename T>
Gradients<T> backward(const Network<T>& net, const Tensor<T>& x, const Tensor<T>& y, LossKind kind, Rng* rng);

}  // namespace doccat::nn
