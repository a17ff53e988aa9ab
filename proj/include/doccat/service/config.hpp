#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "doccat/text/embeddings.hpp"

namespace doccat::service {

struct ServiceConfig {
  std::filesystem::path data_root;
  std::string database;  // empty: <data_root>/repo.db
  bool database_echo = false;
  bool auth = false;
  std::map<std::string, std::string> users;
  std::string host = "127.0.0.1";
  int port = 5000;
  std::size_t training_workers = 1;
  std::size_t classification_workers = 1;
  std::optional<std::filesystem::path> embeddings;
  text::EmbeddingFormat embeddings_format = text::EmbeddingFormat::word2vec_text;
  std::chrono::seconds classify_timeout{300};
};

using Environment = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_environment(const std::string& name);

/// Parses "KEY = value" lines. Blank lines and # comments are ignored.
/// Values are strings ('...', "...", r'...' or bare), True/False, integers,
/// or a JSON object for SVC_USERS. Keys: DATA_ROOT, DATABASE, DATABASE_ECHO,
/// SVC_AUTH, SVC_USERS, BIND_ADDRESS, PORT, WORKERS, CLASSIFY_WORKERS,
/// EMBEDDINGS, EMBEDDINGS_FORMAT and CLASSIFY_TIMEOUT. Every key can be
/// overridden by an environment variable named DOCCAT_<KEY>.
/// Throws InvalidArgument for unknown keys, malformed values or a missing
/// DATA_ROOT.
ServiceConfig parse_config(const std::string& text, const Environment& env = process_environment);
ServiceConfig load_config(const std::filesystem::path& path, const Environment& env = process_environment);

}  // namespace doccat::service
