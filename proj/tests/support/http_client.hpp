#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace doccat::testing {

struct Reply {
  int status = 0;
  std::string raw;
  httplib::Headers headers;

  nlohmann::json json() const { return raw.empty() ? nlohmann::json() : nlohmann::json::parse(raw); }
  std::string header(const std::string& name) const {
    const auto it = headers.find(name);
    return it == headers.end() ? std::string() : it->second;
  }
};

/// Thin synchronous JSON client for a loopback service.
class HttpClient {
 public:
  explicit HttpClient(int port) : client_("127.0.0.1", port) {
    client_.set_read_timeout(120, 0);
    client_.set_keep_alive(true);
  }

  void credentials(const std::string& user, const std::string& password) {
    auth_ = std::make_pair(user, password);
  }
  void anonymous() { auth_.reset(); }

  Reply get(const std::string& path) { return wrap(client_.Get(path, headers())); }
  Reply del(const std::string& path) { return wrap(client_.Delete(path, headers())); }
  Reply post(const std::string& path, const nlohmann::json& body) {
    return wrap(client_.Post(path, headers(), body.dump(), "application/json"));
  }
  Reply post_raw(const std::string& path, const std::string& body, const std::string& type = "text/plain") {
    return wrap(client_.Post(path, headers(), body, type));
  }
  Reply put_raw(const std::string& path, const std::string& body, const std::string& type = "text/plain") {
    return wrap(client_.Put(path, headers(), body, type));
  }

 private:
  httplib::Headers headers() const {
    httplib::Headers h;
    if (auth_) h.insert(httplib::make_basic_authentication_header(auth_->first, auth_->second));
    return h;
  }

  static Reply wrap(const httplib::Result& r) {
    if (!r) throw std::runtime_error("HTTP request failed: " + httplib::to_string(r.error()));
    return {r->status, r->body, r->headers};
  }

  httplib::Client client_;
  std::optional<std::pair<std::string, std::string>> auth_;
};

}  // namespace doccat::testing
