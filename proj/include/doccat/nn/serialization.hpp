#pragma once

#include <filesystem>
#include <iosfwd>

#include "doccat/nn/network.hpp"

namespace doccat::nn {

inline constexpr int kNetworkFormatVersion = 1;

/// Writes <dir>/network.json (layer graph, shapes, hyperparameters) and
/// <dir>/parameters.bin (parameter tensors). Creates dir if needed.
template <typename T>
void save_network(const Network<T>& net, const std::filesystem::path& dir);

/// Loads a network saved by save_network. Parameters stored at a different
/// precision are converted. Throws FormatError on a missing or malformed
/// file or an unsupported version.
template <typename T>
Network<T> load_network(const std::filesystem::path& dir);

/// Structure only; parameters zero-initialized.
template <typename T>
nlohmann::json network_descriptor(const Network<T>& net);
template <typename T>
Network<T> network_from_descriptor(const nlohmann::json& descriptor);

template <typename T>
void write_parameters(std::ostream& out, const Network<T>& net);
template <typename T>
void read_parameters(std::istream& in, Network<T>& net);

}  // namespace doccat::nn
