#include "doccat/nn/serialization.hpp"

#include <fstream>

#include "doccat/common/binary_io.hpp"

namespace doccat::nn {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kParamMagic = 0x4D524150;  // "PARM"

template <typename T>
constexpr const char* precision_name() {
  return sizeof(T) == 4 ? "float32" : "float64";
}

template <typename S, typename T>
void read_tensor_data(std::istream& in, Tensor<T>& dst) {
  if constexpr (std::is_same_v<S, T>) {
    io::read_span(in, dst.values());
  } else {
    std::vector<S> tmp(dst.size());
    io::read_span(in, std::span<S>(tmp));
    for (std::size_t i = 0; i < tmp.size(); ++i) dst[i] = static_cast<T>(tmp[i]);
  }
}

}  // namespace

template <typename T>
nlohmann::json network_descriptor(const Network<T>& net) {
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeId id = 1; id < net.node_count(); ++id) {
    nodes.push_back({{"id", id}, {"inputs", net.node_inputs(id)}, {"layer", net.layer(id).config()}});
  }
  return {{"format", "doccat-network"},
          {"version", kNetworkFormatVersion},
          {"precision", precision_name<T>()},
          {"input_shape", net.input_shape()},
          {"output", net.output()},
          {"nodes", std::move(nodes)}};
}

template <typename T>
Network<T> network_from_descriptor(const nlohmann::json& d) {
  try {
    if (d.at("format").get<std::string>() != "doccat-network") throw FormatError("not a network descriptor");
    const int version = d.at("version").get<int>();
    if (version != kNetworkFormatVersion) {
      throw FormatError("unsupported network format version " + std::to_string(version));
    }
    Network<T> net(d.at("input_shape").get<Shape>());
    for (const auto& node : d.at("nodes")) {
      const NodeId id = net.add(make_layer<T>(node.at("layer")), node.at("inputs").get<std::vector<NodeId>>());
      if (id != node.at("id").get<NodeId>()) throw FormatError("network nodes out of order");
    }
    net.set_output(d.at("output").get<NodeId>());
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed network descriptor: ") + e.what());
  }
}

template <typename T>
void write_parameters(std::ostream& out, const Network<T>& net) {
  const auto params = net.parameters();
  io::write_value(out, kParamMagic);
  io::write_value(out, static_cast<std::uint32_t>(kNetworkFormatVersion));
  io::write_value(out, static_cast<std::uint32_t>(sizeof(T)));
  io::write_value(out, static_cast<std::uint64_t>(params.size()));
  for (const auto* p : params) {
    io::write_value(out, static_cast<std::uint32_t>(p->rank()));
    for (auto extent : p->shape()) io::write_value(out, static_cast<std::uint64_t>(extent));
    io::write_span(out, p->values());
  }
  if (!out) throw StorageError("failed writing network parameters");
}

template <typename T>
void read_parameters(std::istream& in, Network<T>& net) {
  if (io::read_value<std::uint32_t>(in) != kParamMagic) throw FormatError("not a parameter file");
  const auto version = io::read_value<std::uint32_t>(in);
  if (version != kNetworkFormatVersion) {
    throw FormatError("unsupported parameter format version " + std::to_string(version));
  }
  const auto width = io::read_value<std::uint32_t>(in);
  if (width != 4 && width != 8) throw FormatError("unsupported parameter precision");
  auto params = net.parameters();
  if (io::read_value<std::uint64_t>(in) != params.size()) throw FormatError("parameter count mismatch");
  for (auto* p : params) {
    const auto rank = io::read_value<std::uint32_t>(in);
    Shape shape(rank);
    for (auto& extent : shape) extent = static_cast<std::size_t>(io::read_value<std::uint64_t>(in));
    if (shape != p->shape()) {
      throw FormatError("parameter shape " + to_string(shape) + " does not match " + to_string(p->shape()));
    }
    if (width == 4) {
      read_tensor_data<float>(in, *p);
    } else {
      read_tensor_data<double>(in, *p);
    }
  }
}

template <typename T>
void save_network(const Network<T>& net, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "network.json");
    out << network_descriptor(net).dump(2) << '\n';
    if (!out) throw StorageError("cannot write " + (dir / "network.json").string());
  }
  std::ofstream out(dir / "parameters.bin", std::ios::binary);
  if (!out) throw StorageError("cannot write " + (dir / "parameters.bin").string());
  write_parameters(out, net);
}

template <typename T>
Network<T> load_network(const fs::path& dir) {
  std::ifstream desc(dir / "network.json");
  if (!desc) throw FormatError("missing " + (dir / "network.json").string());
  nlohmann::json d;
  try {
    d = nlohmann::json::parse(desc);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed network.json: ") + e.what());
  }
  Network<T> net = network_from_descriptor<T>(d);
  std::ifstream params(dir / "parameters.bin", std::ios::binary);
  if (!params) throw FormatError("missing " + (dir / "parameters.bin").string());
  read_parameters(params, net);
  return net;
}

#define DOCCAT_INSTANTIATE_SERIALIZATION(T)                                   \
  template nlohmann::json network_descriptor(const Network<T>&);              \
  template Network<T> network_from_descriptor<T>(const nlohmann::json&);      \
  template void write_parameters(std::ostream&, const Network<T>&);           \
  template void read_parameters(std::istream&, Network<T>&);                  \
  template void save_network(const Network<T>&, const fs::path&);             \
  template Network<T> load_network<T>(const fs::path&);

DOCCAT_INSTANTIATE_SERIALIZATION(float)
DOCCAT_INSTANTIATE_SERIALIZATION(double)

}  // namespace doccat::nn
