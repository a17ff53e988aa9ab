#include "doccat/nn/network.hpp"

namespace doccat::nn {

template <typename T>
Network<T>::Network(Shape input_shape) {
  if (input_shape.empty() || shape_size(input_shape) == 0) {
    throw InvalidArgument("network input shape must be non-empty with positive extents");
  }
  shapes_.push_back(std::move(input_shape));
}

template <typename T>
Network<T>::Network(const Network& other)
    : shapes_(other.shapes_), output_(other.output_), mode_(other.mode_) {
  nodes_.reserve(other.nodes_.size());
  for (const auto& n : other.nodes_) nodes_.push_back(Node{n.layer->clone(), n.inputs});
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
NodeId Network<T>::add(std::unique_ptr<Layer<T>> layer, std::vector<NodeId> inputs) {
  if (!layer) throw InvalidArgument("null layer");
  const NodeId id = node_count();
  std::vector<Shape> in_shapes;
  for (NodeId in : inputs) {
    if (in >= id) throw InvalidArgument("node inputs must refer to existing nodes");
    in_shapes.push_back(shapes_[in]);
  }
  Shape out = layer->output_shape(in_shapes);
  nodes_.push_back(Node{std::move(layer), std::move(inputs)});
  shapes_.push_back(std::move(out));
  output_ = id;
  return id;
}

template <typename T>
void Network<T>::set_output(NodeId id) {
  if (id >= node_count()) throw InvalidArgument("output node does not exist");
  output_ = id;
}

template <typename T>
const typename Network<T>::Node& Network<T>::node(NodeId id) const {
  if (id == 0 || id >= node_count()) throw InvalidArgument("node " + std::to_string(id) + " has no layer");
  return nodes_[id - 1];
}

template <typename T>
const Layer<T>& Network<T>::layer(NodeId id) const {
  return *node(id).layer;
}

template <typename T>
const std::vector<NodeId>& Network<T>::node_inputs(NodeId id) const {
  return node(id).inputs;
}

template <typename T>
std::vector<Tensor<T>*> Network<T>::parameters() {
  std::vector<Tensor<T>*> out;
  for (auto& n : nodes_) {
    for (auto& p : n.layer->parameters()) out.push_back(&p);
  }
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> Network<T>::parameters() const {
  std::vector<const Tensor<T>*> out;
  for (const auto& n : nodes_) {
    const Layer<T>& layer = *n.layer;
    for (const auto& p : layer.parameters()) out.push_back(&p);
  }
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto* p : parameters()) total += p->size();
  return total;
}

template <typename T>
void Network<T>::initialize(Rng& rng) {
  for (auto& n : nodes_) n.layer->initialize(rng);
}

template <typename T>
ForwardPass<T> Network<T>::forward(const Tensor<T>& x, Mode mode, Rng* rng) const {
  if (x.rank() != input_shape().size() + 1 ||
      !std::equal(input_shape().begin(), input_shape().end(), x.shape().begin() + 1)) {
    throw ShapeError("network expects input " + to_string(batched(0, input_shape())) + " (any batch), got " +
                     to_string(x.shape()));
  }
  ForwardPass<T> pass;
  pass.mode = mode;
  pass.outputs.resize(node_count());
  pass.caches.resize(node_count());
  pass.outputs[0] = x;
  const ForwardContext ctx{mode, rng};
  std::vector<const Tensor<T>*> inputs;
  for (NodeId id = 1; id <= output_; ++id) {
    const Node& n = nodes_[id - 1];
    inputs.clear();
    for (NodeId in : n.inputs) inputs.push_back(&pass.outputs[in]);
    pass.outputs[id] = n.layer->forward(inputs, ctx, &pass.caches[id]);
  }
  return pass;
}

template <typename T>
Tensor<T> Network<T>::predict(const Tensor<T>& x) const {
  ForwardPass<T> pass = forward(x, Mode::eval, nullptr);
  return std::move(pass.outputs[output_]);
}

namespace {

template <typename T>
const Activation<T>* output_activation(const Network<T>& net) {
  if (net.output() == 0) return nullptr;
  return dynamic_cast<const Activation<T>*>(&net.layer(net.output()));
}

template <typename T>
bool fused_output(const Network<T>& net, LossKind kind) {
  const auto* act = output_activation(net);
  if (act == nullptr) return false;
  return (kind == LossKind::categorical_cross_entropy && act->kind().type == ActivationType::softmax) ||
         (kind == LossKind::binary_cross_entropy && act->kind().type == ActivationType::sigmoid);
}

}  // namespace

template <typename T>
void check_loss_pairing(const Network<T>& net, LossKind kind) {
  const auto* act = output_activation(net);
  if (kind == LossKind::categorical_cross_entropy &&
      (act == nullptr || act->kind().type != ActivationType::softmax)) {
    throw InvalidArgument("categorical cross-entropy requires a softmax output");
  }
  if (kind == LossKind::binary_cross_entropy && (act == nullptr || act->kind().type != ActivationType::sigmoid)) {
    throw InvalidArgument("binary cross-entropy requires a sigmoid output");
  }
}

template <typename T>
Gradients<T> Network<T>::backward(const ForwardPass<T>& pass, const Tensor<T>& y, LossKind kind) const {
  check_loss_pairing(*this, kind);
  const Tensor<T>& a = pass.outputs.at(output_);
  Gradients<T> result;
  result.loss = nn::loss(kind, y, a);

  // Parameter gradient slots, grouped per node.
  std::vector<std::size_t> first_param(node_count(), 0);
  std::size_t count = 0;
  for (NodeId id = 1; id < node_count(); ++id) {
    first_param[id] = count;
    const Layer<T>& layer = *nodes_[id - 1].layer;
    for (const auto& p : layer.parameters()) {
      result.params.emplace_back(p.shape());
      ++count;
    }
  }

  std::vector<Tensor<T>> grad(node_count());
  NodeId start = output_;
  if (fused_output(*this, kind)) {
    // d(loss)/d(pre-activation) = (a - y) / batch for both fused pairings.
    const NodeId pre = nodes_[output_ - 1].inputs.at(0);
    Tensor<T> g(a.shape());
    const double scale = a.dim(0) ? 1.0 / static_cast<double>(a.dim(0)) : 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = static_cast<T>(scale * (static_cast<double>(a[i]) - y[i]));
    }
    grad[pre] = std::move(g);
    start = pre;
  } else {
    grad[output_] = loss_gradient(kind, y, a);
  }

  // needs[id]: some parameter lies upstream of (or at) node id.
  std::vector<char> needs(node_count(), 0);
  for (NodeId id = 1; id < node_count(); ++id) {
    const Node& n = nodes_[id - 1];
    const Layer<T>& layer = *n.layer;
    needs[id] = !layer.parameters().empty();
    for (NodeId in : n.inputs) needs[id] = needs[id] || needs[in];
  }

  std::vector<const Tensor<T>*> inputs;
  for (NodeId id = start; id >= 1; --id) {
    if (grad[id].shape().empty()) continue;  // not on the output path
    const Node& n = nodes_[id - 1];
    inputs.clear();
    for (NodeId in : n.inputs) inputs.push_back(&pass.outputs[in]);
    const std::size_t np = n.layer->parameters().size();
    std::span<Tensor<T>> gp(result.params.data() + first_param[id], np);
    bool input_grads = false;
    for (NodeId in : n.inputs) input_grads = input_grads || needs[in];
    auto grads_in = n.layer->backward(inputs, pass.outputs[id], grad[id], pass.caches[id], gp, input_grads);
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const NodeId in = n.inputs[k];
      if (!needs[in]) continue;
      if (grad[in].shape().empty()) {
        grad[in] = std::move(grads_in[k]);
      } else {
        grad[in] += grads_in[k];
      }
    }
    grad[id] = Tensor<T>();
  }
  return result;
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
  Network<U> out(input_shape());
  for (NodeId id = 1; id < node_count(); ++id) {
    const Node& n = nodes_[id - 1];
    auto layer = make_layer<U>(n.layer->config());
    auto src = n.layer->parameters();
    auto dst = layer->parameters();
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k].template cast<U>();
    out.add(std::move(layer), n.inputs);
  }
  out.set_output(output_);
  out.set_mode(mode_);
  return out;
}

template <typename T>
Gradients<T> backward(const Network<T>& net, const Tensor<T>& x, const Tensor<T>& y, LossKind kind, Rng* rng) {
  return net.backward(net.forward(x, Mode::train, rng), y, kind);
}

template class Network<float>;
template class Network<double>;
template class Network<long double>;
template Network<long double> Network<float>::cast<long double>() const;
template Network<long double> Network<double>::cast<long double>() const;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template Network<float> Network<float>::cast<float>() const;
template Network<double> Network<double>::cast<double>() const;
template void check_loss_pairing(const Network<float>&, LossKind);
template void check_loss_pairing(const Network<double>&, LossKind);
template Gradients<float> backward(const Network<float>&, const Tensor<float>&, const Tensor<float>&, LossKind,
                                   Rng*);
template Gradients<double> backward(const Network<double>&, const Tensor<double>&, const Tensor<double>&,
                                    LossKind, Rng*);

}  // namespace doccat::nn
