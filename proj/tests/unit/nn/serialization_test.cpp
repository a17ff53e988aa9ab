#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "doccat/nn/serialization.hpp"
#include "support/random_nets.hpp"
#include "support/temp_dir.hpp"

using namespace doccat::nn;
using doccat::testing::random_net_case;

TEST(Serialization, RoundTripReproducesPredictions) {
  doccat::testing::TempDir tmp;
  for (std::size_t v = 0; v < 4; ++v) {
    auto c = random_net_case<float>(v, 31);
    save_network(c.net, tmp.path() / std::to_string(v));
    auto loaded = load_network<float>(tmp.path() / std::to_string(v));
    auto a = c.net.predict(c.x);
    auto b = loaded.predict(c.x);
    ASSERT_EQ(a.shape(), b.shape());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
    EXPECT_EQ(network_descriptor(loaded), network_descriptor(c.net));
  }
}

TEST(Serialization, LoadsAcrossPrecision) {
  doccat::testing::TempDir tmp;
  auto c = random_net_case<double>(1, 32);
  save_network(c.net, tmp.path());
  auto loaded = load_network<float>(tmp.path());
  auto a = c.net.predict(c.x);
  auto b = loaded.predict(c.x.cast<float>());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-5);
}

TEST(Serialization, MissingFiles) {
  doccat::testing::TempDir tmp;
  EXPECT_THROW(load_network<float>(tmp.path()), doccat::FormatError);
}

TEST(Serialization, FutureVersionRejected) {
  doccat::testing::TempDir tmp;
  auto c = random_net_case<float>(1, 33);
  save_network(c.net, tmp.path());
  auto d = network_descriptor(c.net);
  d["version"] = kNetworkFormatVersion + 1;
  std::ofstream(tmp.path() / "network.json") << d.dump();
  EXPECT_THROW(load_network<float>(tmp.path()), doccat::FormatError);
}

TEST(Serialization, TruncatedParametersRejected) {
  doccat::testing::TempDir tmp;
  auto c = random_net_case<float>(0, 34);
  save_network(c.net, tmp.path());
  const auto file = tmp.path() / "parameters.bin";
  std::filesystem::resize_file(file, std::filesystem::file_size(file) / 2);
  EXPECT_THROW(load_network<float>(tmp.path()), doccat::FormatError);
}
