#include "doccat/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace doccat::nn {

std::string layer_type_name(LayerType type) {
  switch (type) {
    case LayerType::dense: return "dense";
    case LayerType::conv1d: return "conv1d";
    case LayerType::max_over_time: return "max_over_time";
    case LayerType::dropout: return "dropout";
    case LayerType::activation: return "activation";
    case LayerType::concat: return "concat";
  }
  return "unknown";
}

namespace {

template <typename T>
void glorot_uniform(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-limit, limit));
}

void expect_inputs(std::span<const Shape> inputs, std::size_t n, const char* layer) {
  if (inputs.size() != n) {
    throw ShapeError(std::string(layer) + " expects " + std::to_string(n) + " input(s), got " +
                     std::to_string(inputs.size()));
  }
}

template <typename T>
const Tensor<T>& single_input(std::span<const Tensor<T>* const> inputs, const char* layer) {
  if (inputs.size() != 1 || inputs[0] == nullptr) {
    throw ShapeError(std::string(layer) + " expects exactly one input");
  }
  return *inputs[0];
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  // Eight independent lanes let the compiler vectorize without reassociating.
  T lane[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) lane[j] += a[i + j] * b[i + j];
  }
  T acc = ((lane[0] + lane[4]) + (lane[1] + lane[5])) + ((lane[2] + lane[6]) + (lane[3] + lane[7]));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
std::size_t filled_rows(const T* seq, std::size_t steps, std::size_t dim) {
  std::size_t rows = steps;
  while (rows > 0) {
    const T* row = seq + (rows - 1) * dim;
    if (std::any_of(row, row + dim, [](T v) { return v != T{0}; })) break;
    --rows;
  }
  return rows;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

// ---------------------------------------------------------------- Dense

template <typename T>
Dense<T>::Dense(std::size_t in, std::size_t out) : in_(in), out_(out) {
  if (in == 0 || out == 0) throw InvalidArgument("dense layer dimensions must be positive");
  params_.emplace_back(Shape{out, in});
  params_.emplace_back(Shape{out});
}

template <typename T>
Shape Dense<T>::output_shape(std::span<const Shape> inputs) const {
  expect_inputs(inputs, 1, "dense");
  if (inputs[0] != Shape{in_}) {
    throw ShapeError("dense expects input " + to_string(Shape{in_}) + ", got " + to_string(inputs[0]));
  }
  return {out_};
}

template <typename T>
Tensor<T> Dense<T>::forward(std::span<const Tensor<T>* const> inputs, const ForwardContext&,
                            LayerCache<T>*) const {
  const auto& x = single_input(inputs, "dense");
  if (x.rank() != 2 || x.dim(1) != in_) {
    throw ShapeError("dense expects (batch x " + std::to_string(in_) + "), got " + to_string(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  Tensor<T> out(Shape{batch, out_});
  const T* w = weights().data();
  const T* b = bias().data();
  for (std::size_t n = 0; n < batch; ++n) {
    const T* row = x.data() + n * in_;
    T* o = out.data() + n * out_;
    for (std::size_t i = 0; i < out_; ++i) o[i] = dot(row, w + i * in_, in_) + b[i];
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> Dense<T>::backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>&,
                                          const Tensor<T>& grad_output, const LayerCache<T>&,
                                          std::span<Tensor<T>> grad_params, bool input_grads) const {
  const auto& x = single_input(inputs, "dense");
  const std::size_t batch = x.dim(0);
  Tensor<T> grad_x = input_grads ? Tensor<T>(x.shape()) : Tensor<T>();
  T* gw = grad_params[0].data();
  T* gb = grad_params[1].data();
  const T* w = weights().data();
  for (std::size_t n = 0; n < batch; ++n) {
    const T* row = x.data() + n * in_;
    const T* g = grad_output.data() + n * out_;
    T* gx = input_grads ? grad_x.data() + n * in_ : nullptr;
    for (std::size_t i = 0; i < out_; ++i) {
      const T gi = g[i];
      if (gi == T{0}) continue;
      gb[i] += gi;
      axpy(gi, row, gw + i * in_, in_);
      if (gx) axpy(gi, w + i * in_, gx, in_);
    }
  }
  std::vector<Tensor<T>> grads;
  grads.push_back(std::move(grad_x));
  return grads;
}

template <typename T>
void Dense<T>::initialize(Rng& rng) {
  glorot_uniform(weights(), in_, out_, rng);
  bias().fill(T{0});
}

template <typename T>
nlohmann::json Dense<T>::config() const {
  return {{"type", "dense"}, {"in", in_}, {"out", out_}};
}

// ---------------------------------------------------------------- Conv1D

template <typename T>
Conv1D<T>::Conv1D(std::size_t filter_count, std::size_t filter_len, std::size_t dim)
    : count_(filter_count), len_(filter_len), dim_(dim) {
  if (filter_count == 0 || filter_len == 0 || dim == 0) {
    throw InvalidArgument("conv1d filter count, length and dimension must be positive");
  }
  params_.emplace_back(Shape{count_, len_ * dim_});
  params_.emplace_back(Shape{count_});
}

template <typename T>
Shape Conv1D<T>::output_shape(std::span<const Shape> inputs) const {
  expect_inputs(inputs, 1, "conv1d");
  const Shape& in = inputs[0];
  if (in.size() != 2 || in[1] != dim_) {
    throw ShapeError("conv1d expects (L x " + std::to_string(dim_) + "), got " + to_string(in));
  }
  if (in[0] < len_) {
    throw InvalidArgument("sequence too short for convolution: length " + std::to_string(in[0]) +
                          " < filter length " + std::to_string(len_));
  }
  return {in[0] - len_ + 1, count_};
}

template <typename T>
Tensor<T> Conv1D<T>::forward(std::span<const Tensor<T>* const> inputs, const ForwardContext&,
                             LayerCache<T>*) const {
  const auto& x = single_input(inputs, "conv1d");
  if (x.rank() != 3 || x.dim(2) != dim_) {
    throw ShapeError("conv1d expects (batch x L x " + std::to_string(dim_) + "), got " + to_string(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  const std::size_t steps = x.dim(1);
  if (steps < len_) {
    throw InvalidArgument("sequence too short for convolution: length " + std::to_string(steps) +
                          " < filter length " + std::to_string(len_));
  }
  const std::size_t positions = steps - len_ + 1;
  const std::size_t window = len_ * dim_;
  Tensor<T> out(Shape{batch, positions, count_});
  const T* f = filters().data();
  const T* b = bias().data();
  for (std::size_t n = 0; n < batch; ++n) {
    const T* seq = x.data() + n * steps * dim_;
    T* o = out.data() + n * positions * count_;
    // Windows lying entirely in trailing zero padding reduce to the bias.
    const std::size_t filled = filled_rows(seq, steps, dim_);
    for (std::size_t p = 0; p < positions; ++p) {
      // Rows p..p+len-1 are contiguous in row-major storage.
      const T* win = seq + p * dim_;
      T* op = o + p * count_;
      if (p >= filled) {
        for (std::size_t k = 0; k < count_; ++k) op[k] = b[k];
        continue;
      }
      for (std::size_t k = 0; k < count_; ++k) op[k] = dot(win, f + k * window, window) + b[k];
    }
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> Conv1D<T>::backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>&,
                                           const Tensor<T>& grad_output, const LayerCache<T>&,
                                           std::span<Tensor<T>> grad_params, bool input_grads) const {
  const auto& x = single_input(inputs, "conv1d");
  const std::size_t batch = x.dim(0);
  const std::size_t steps = x.dim(1);
  const std::size_t positions = steps - len_ + 1;
  const std::size_t window = len_ * dim_;
  Tensor<T> grad_x = input_grads ? Tensor<T>(x.shape()) : Tensor<T>();
  T* gf = grad_params[0].data();
  T* gb = grad_params[1].data();
  const T* f = filters().data();
  for (std::size_t n = 0; n < batch; ++n) {
    const T* seq = x.data() + n * steps * dim_;
    T* gseq = input_grads ? grad_x.data() + n * steps * dim_ : nullptr;
    const T* g = grad_output.data() + n * positions * count_;
    const std::size_t filled = filled_rows(seq, steps, dim_);
    for (std::size_t p = 0; p < positions; ++p) {
      const T* win = seq + p * dim_;
      T* gwin = gseq ? gseq + p * dim_ : nullptr;
      const T* gp = g + p * count_;
      for (std::size_t k = 0; k < count_; ++k) {
        const T gk = gp[k];
        if (gk == T{0}) continue;
        gb[k] += gk;
        if (p < filled) axpy(gk, win, gf + k * window, window);
        if (gwin) axpy(gk, f + k * window, gwin, window);
      }
    }
  }
  std::vector<Tensor<T>> grads;
  grads.push_back(std::move(grad_x));
  return grads;
}

template <typename T>
void Conv1D<T>::initialize(Rng& rng) {
  glorot_uniform(filters(), len_ * dim_, len_ * count_, rng);
  bias().fill(T{0});
}

template <typename T>
nlohmann::json Conv1D<T>::config() const {
  return {{"type", "conv1d"}, {"filters", count_}, {"filter_len", len_}, {"dim", dim_}};
}

// ---------------------------------------------------------------- MaxOverTime

template <typename T>
Shape MaxOverTime<T>::output_shape(std::span<const Shape> inputs) const {
  expect_inputs(inputs, 1, "max_over_time");
  if (inputs[0].size() != 2) {
    throw ShapeError("max_over_time expects (L x C), got " + to_string(inputs[0]));
  }
  return {inputs[0][1]};
}

template <typename T>
Tensor<T> MaxOverTime<T>::forward(std::span<const Tensor<T>* const> inputs, const ForwardContext&,
                                  LayerCache<T>* cache) const {
  const auto& x = single_input(inputs, "max_over_time");
  if (x.rank() != 3) throw ShapeError("max_over_time expects (batch x L x C), got " + to_string(x.shape()));
  const std::size_t batch = x.dim(0);
  const std::size_t steps = x.dim(1);
  const std::size_t channels = x.dim(2);
  if (steps == 0) throw InvalidArgument("max_over_time on an empty sequence");
  Tensor<T> out(Shape{batch, channels});
  std::vector<std::uint32_t> argmax(batch * channels, 0);
  for (std::size_t n = 0; n < batch; ++n) {
    const T* seq = x.data() + n * steps * channels;
    T* o = out.data() + n * channels;
    std::uint32_t* am = argmax.data() + n * channels;
    for (std::size_t c = 0; c < channels; ++c) o[c] = seq[c];
    for (std::size_t p = 1; p < steps; ++p) {
      const T* row = seq + p * channels;
      for (std::size_t c = 0; c < channels; ++c) {
        if (row[c] > o[c]) {  // strict: first position wins ties
          o[c] = row[c];
          am[c] = static_cast<std::uint32_t>(p);
        }
      }
    }
  }
  if (cache) cache->argmax = std::move(argmax);
  return out;
}

template <typename T>
std::vector<Tensor<T>> MaxOverTime<T>::backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>&,
                                                const Tensor<T>& grad_output, const LayerCache<T>& cache,
                                                std::span<Tensor<T>>, bool) const {
  const auto& x = single_input(inputs, "max_over_time");
  const std::size_t batch = x.dim(0);
  const std::size_t steps = x.dim(1);
  const std::size_t channels = x.dim(2);
  if (cache.argmax.size() != batch * channels) {
    throw InvalidArgument("max_over_time backward without a matching forward cache");
  }
  Tensor<T> grad_x(x.shape());
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t p = cache.argmax[n * channels + c];
      grad_x[(n * steps + p) * channels + c] += grad_output[n * channels + c];
    }
  }
  std::vector<Tensor<T>> grads;
  grads.push_back(std::move(grad_x));
  return grads;
}

template <typename T>
nlohmann::json MaxOverTime<T>::config() const {
  return {{"type", "max_over_time"}};
}

// ---------------------------------------------------------------- Dropout

template <typename T>
Dropout<T>::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must be in [0, 1)");
}

template <typename T>
Shape Dropout<T>::output_shape(std::span<const Shape> inputs) const {
  expect_inputs(inputs, 1, "dropout");
  return inputs[0];
}

template <typename T>
Tensor<T> Dropout<T>::forward(std::span<const Tensor<T>* const> inputs, const ForwardContext& ctx,
                              LayerCache<T>* cache) const {
  const auto& x = single_input(inputs, "dropout");
  if (ctx.mode == Mode::eval || rate_ == 0.0) {
    if (cache) cache->mask = Tensor<T>();
    return x;
  }
  if (ctx.rng == nullptr) throw InvalidArgument("train-mode dropout requires a random source");
  const auto keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
  Tensor<T> mask(x.shape());
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T m = ctx.rng->uniform() < rate_ ? T{0} : keep_scale;
    mask[i] = m;
    out[i] = x[i] * m;
  }
  if (cache) cache->mask = std::move(mask);
  return out;
}

template <typename T>
std::vector<Tensor<T>> Dropout<T>::backward(std::span<const Tensor<T>* const>, const Tensor<T>&,
                                            const Tensor<T>& grad_output, const LayerCache<T>& cache,
                                            std::span<Tensor<T>>, bool) const {
  std::vector<Tensor<T>> grads;
  if (cache.mask.empty()) {
    grads.push_back(grad_output);
    return grads;
  }
  Tensor<T> grad_x(grad_output.shape());
  for (std::size_t i = 0; i < grad_x.size(); ++i) grad_x[i] = grad_output[i] * cache.mask[i];
  grads.push_back(std::move(grad_x));
  return grads;
}

template <typename T>
nlohmann::json Dropout<T>::config() const {
  return {{"type", "dropout"}, {"rate", rate_}};
}

// ---------------------------------------------------------------- Activation

template <typename T>
Shape Activation<T>::output_shape(std::span<const Shape> inputs) const {
  expect_inputs(inputs, 1, "activation");
  if (kind_.type == ActivationType::softmax && inputs[0].size() != 1) {
    throw ShapeError("softmax expects flat per-sample vectors, got " + to_string(inputs[0]));
  }
  return inputs[0];
}

template <typename T>
Tensor<T> Activation<T>::forward(std::span<const Tensor<T>* const> inputs, const ForwardContext&,
                                 LayerCache<T>*) const {
  return activate(kind_, single_input(inputs, "activation"));
}

template <typename T>
std::vector<Tensor<T>> Activation<T>::backward(std::span<const Tensor<T>* const> inputs,
                                               const Tensor<T>& output, const Tensor<T>& grad_output,
                                               const LayerCache<T>&, std::span<Tensor<T>>, bool) const {
  std::vector<Tensor<T>> grads;
  grads.push_back(activation_backward(kind_, single_input(inputs, "activation"), output, grad_output));
  return grads;
}

template <typename T>
nlohmann::json Activation<T>::config() const {
  nlohmann::json j = {{"type", "activation"}, {"activation", activation_name(kind_)}};
  if (kind_.type == ActivationType::leaky_relu) j["slope"] = kind_.slope;
  return j;
}

// ---------------------------------------------------------------- Concat

template <typename T>
Concat<T>::Concat(std::size_t inputs) : inputs_(inputs) {
  if (inputs == 0) throw InvalidArgument("concat needs at least one input");
}

template <typename T>
Shape Concat<T>::output_shape(std::span<const Shape> inputs) const {
  expect_inputs(inputs, inputs_, "concat");
  std::size_t width = 0;
  for (const auto& s : inputs) {
    if (s.size() != 1) throw ShapeError("concat expects flat per-sample vectors, got " + to_string(s));
    width += s[0];
  }
  return {width};
}

template <typename T>
Tensor<T> Concat<T>::forward(std::span<const Tensor<T>* const> inputs, const ForwardContext&,
                             LayerCache<T>*) const {
  if (inputs.size() != inputs_) throw ShapeError("concat input count mismatch");
  const std::size_t batch = inputs[0]->dim(0);
  std::size_t width = 0;
  for (const auto* in : inputs) {
    if (in->rank() != 2 || in->dim(0) != batch) throw ShapeError("concat inputs must be (batch x n)");
    width += in->dim(1);
  }
  Tensor<T> out(Shape{batch, width});
  for (std::size_t n = 0; n < batch; ++n) {
    T* o = out.data() + n * width;
    for (const auto* in : inputs) {
      const std::size_t w = in->dim(1);
      std::copy_n(in->data() + n * w, w, o);
      o += w;
    }
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> Concat<T>::backward(std::span<const Tensor<T>* const> inputs, const Tensor<T>&,
                                           const Tensor<T>& grad_output, const LayerCache<T>&,
                                           std::span<Tensor<T>>, bool) const {
  const std::size_t batch = grad_output.dim(0);
  const std::size_t width = grad_output.dim(1);
  std::vector<Tensor<T>> grads;
  std::size_t offset = 0;
  for (const auto* in : inputs) {
    const std::size_t w = in->dim(1);
    Tensor<T> g(in->shape());
    for (std::size_t n = 0; n < batch; ++n) {
      std::copy_n(grad_output.data() + n * width + offset, w, g.data() + n * w);
    }
    offset += w;
    grads.push_back(std::move(g));
  }
  return grads;
}

template <typename T>
nlohmann::json Concat<T>::config() const {
  return {{"type", "concat"}, {"inputs", inputs_}};
}

// ---------------------------------------------------------------- factory

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const nlohmann::json& config) {
  try {
    const std::string type = config.at("type").get<std::string>();
    if (type == "dense") {
      return std::make_unique<Dense<T>>(config.at("in").get<std::size_t>(), config.at("out").get<std::size_t>());
    }
    if (type == "conv1d") {
      return std::make_unique<Conv1D<T>>(config.at("filters").get<std::size_t>(),
                                         config.at("filter_len").get<std::size_t>(),
                                         config.at("dim").get<std::size_t>());
    }
    if (type == "max_over_time") return std::make_unique<MaxOverTime<T>>();
    if (type == "dropout") return std::make_unique<Dropout<T>>(config.at("rate").get<double>());
    if (type == "activation") {
      const double slope = config.value("slope", ActivationKind::kDefaultLeakySlope);
      return std::make_unique<Activation<T>>(parse_activation(config.at("activation").get<std::string>(), slope));
    }
    if (type == "concat") return std::make_unique<Concat<T>>(config.at("inputs").get<std::size_t>());
    throw FormatError("unknown layer type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed layer descriptor: ") + e.what());
  }
}

// ---------------------------------------------------------------- single-sample helpers

template <typename T>
Tensor<T> dense_forward(const Dense<T>& layer, const Tensor<T>& x) {
  const Tensor<T>* in[] = {&x};
  return layer.forward(in, ForwardContext{}, nullptr);
}

template <typename T>
Tensor<T> conv1d_forward(const Conv1D<T>& layer, const Tensor<T>& seq) {
  if (seq.rank() != 2) throw ShapeError("conv1d_forward expects (L x dim), got " + to_string(seq.shape()));
  Tensor<T> batch = seq;
  batch.reshape(batched(1, seq.shape()));
  const Tensor<T>* in[] = {&batch};
  Tensor<T> out = layer.forward(in, ForwardContext{}, nullptr);
  out.reshape({out.dim(1), out.dim(2)});
  return out;
}

template <typename T>
Tensor<T> max_over_time(const Tensor<T>& seq) {
  if (seq.rank() != 2) throw ShapeError("max_over_time expects (L x C), got " + to_string(seq.shape()));
  if (seq.dim(0) == 0) throw InvalidArgument("max_over_time on an empty sequence");
  Tensor<T> batch = seq;
  batch.reshape(batched(1, seq.shape()));
  const Tensor<T>* in[] = {&batch};
  Tensor<T> out = MaxOverTime<T>().forward(in, ForwardContext{}, nullptr);
  out.reshape({out.dim(1)});
  return out;
}

template <typename T>
Tensor<T> dropout_forward(const Dropout<T>& layer, const Tensor<T>& x, Mode mode, Rng& rng) {
  const Tensor<T>* in[] = {&x};
  return layer.forward(in, ForwardContext{mode, &rng}, nullptr);
}

#define DOCCAT_INSTANTIATE_LAYERS(T)                                           \
  template class Dense<T>;                                                     \
  template class Conv1D<T>;                                                    \
  template class MaxOverTime<T>;                                               \
  template class Dropout<T>;                                                   \
  template class Activation<T>;                                                \
  template class Concat<T>;                                                    \
  template std::unique_ptr<Layer<T>> make_layer<T>(const nlohmann::json&);     \
  template Tensor<T> dense_forward(const Dense<T>&, const Tensor<T>&);         \
  template Tensor<T> conv1d_forward(const Conv1D<T>&, const Tensor<T>&);       \
  template Tensor<T> max_over_time(const Tensor<T>&);                          \
  template Tensor<T> dropout_forward(const Dropout<T>&, const Tensor<T>&, Mode, Rng&);

DOCCAT_INSTANTIATE_LAYERS(float)
DOCCAT_INSTANTIATE_LAYERS(double)
DOCCAT_INSTANTIATE_LAYERS(long double)

#undef DOCCAT_INSTANTIATE_LAYERS

}  // namespace doccat::nn
