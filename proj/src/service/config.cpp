#include "doccat/service/config.hpp"

#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doccat/common/error.hpp"

namespace doccat::service {

namespace {

constexpr std::array kKeys = {"DATA_ROOT", "DATABASE",      "DATABASE_ECHO",     "SVC_AUTH",
                              "SVC_USERS", "BIND_ADDRESS",  "PORT",              "WORKERS",
                              "CLASSIFY_WORKERS", "EMBEDDINGS", "EMBEDDINGS_FORMAT", "CLASSIFY_TIMEOUT"};

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string unquote(const std::string& key, std::string value) {
  if (value.size() >= 2 && (value.front() == 'r' || value.front() == 'R') && (value[1] == '\'' || value[1] == '"')) {
    value.erase(0, 1);
  }
  if (!value.empty() && (value.front() == '\'' || value.front() == '"')) {
    if (value.size() < 2 || value.back() != value.front()) {
      throw InvalidArgument("unterminated string for " + key);
    }
    return value.substr(1, value.size() - 2);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = unquote(key, raw);
  if (v == "True" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "False" || v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument(key + " must be True or False, got '" + raw + "'");
}

long long parse_int(const std::string& key, const std::string& raw, long long lo, long long hi) {
  const std::string v = unquote(key, raw);
  long long out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size() || out < lo || out > hi) {
    throw InvalidArgument(key + " must be an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "], got '" + raw + "'");
  }
  return out;
}

std::map<std::string, std::string> parse_users(const std::string& raw) {
  std::string text = raw;
  // Python dict literals with single quotes are accepted as well.
  if (text.find('"') == std::string::npos) {
    for (auto& c : text) {
      if (c == '\'') c = '"';
    }
  }
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw InvalidArgument("SVC_USERS must map user names to passwords");
    std::map<std::string, std::string> out;
    for (const auto& [user, password] : j.items()) out[user] = password.get<std::string>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("SVC_USERS: ") + e.what());
  }
}

void apply(ServiceConfig& c, const std::string& key, const std::string& raw) {
  if (key == "DATA_ROOT") {
    c.data_root = unquote(key, raw);
  } else if (key == "DATABASE") {
    c.database = unquote(key, raw);
  } else if (key == "DATABASE_ECHO") {
    c.database_echo = parse_bool(key, raw);
  } else if (key == "SVC_AUTH") {
    c.auth = parse_bool(key, raw);
  } else if (key == "SVC_USERS") {
    c.users = parse_users(raw);
  } else if (key == "BIND_ADDRESS") {
    c.host = unquote(key, raw);
  } else if (key == "PORT") {
    c.port = static_cast<int>(parse_int(key, raw, 0, 65535));
  } else if (key == "WORKERS") {
    c.training_workers = static_cast<std::size_t>(parse_int(key, raw, 0, 256));
  } else if (key == "CLASSIFY_WORKERS") {
    c.classification_workers = static_cast<std::size_t>(parse_int(key, raw, 1, 256));
  } else if (key == "EMBEDDINGS") {
    const std::string v = unquote(key, raw);
    c.embeddings = v.empty() ? std::nullopt : std::optional<std::filesystem::path>(v);
  } else if (key == "EMBEDDINGS_FORMAT") {
    c.embeddings_format = text::parse_embedding_format(unquote(key, raw));
  } else if (key == "CLASSIFY_TIMEOUT") {
    c.classify_timeout = std::chrono::seconds(parse_int(key, raw, 1, 86400));
  } else {
    throw InvalidArgument("unknown configuration key '" + key + "'");
  }
}

}  // namespace

std::optional<std::string> process_environment(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

ServiceConfig parse_config(const std::string& text, const Environment& env) {
  ServiceConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("line " + std::to_string(number) + ": expected KEY = value");
    }
    apply(c, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  if (env) {
    for (const char* key : kKeys) {
      if (const auto v = env(std::string("DOCCAT_") + key)) apply(c, key, trim(*v));
    }
  }
  if (c.data_root.empty()) throw InvalidArgument("DATA_ROOT is required");
  if (c.auth && c.users.empty()) throw InvalidArgument("SVC_AUTH needs at least one user in SVC_USERS");
  return c;
}

ServiceConfig load_config(const std::filesystem::path& path, const Environment& env) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read configuration " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), env);
}

}  // namespace doccat::service
