#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "doccat/repo/repository.hpp"
#include "doccat/worker/pool.hpp"
#include "doccat/worker/task_queue.hpp"

namespace doccat::service {

struct ApiRequest {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> query;
  std::string authorization;  // raw Authorization header, may be empty
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;

  std::string header(const std::string& name) const;
};

struct ApiOptions {
  bool auth = false;
  std::map<std::string, std::string> users;
  std::chrono::milliseconds classify_timeout{std::chrono::minutes(5)};
};

/// Transport-independent REST API over a repository and worker pool.
/// Every path accepts an optional trailing slash. Errors are JSON objects
/// {"status", "error"}: 400 for malformed input, 401 for failed
/// authentication, 404 for unknown resources, 405 for unsupported methods,
/// 409 for conflicts and 503 for classification timeouts.
class Api {
 public:
  Api(worker::WorkerPool& pool, ApiOptions options);
  ~Api();
  Api(const Api&) = delete;
  Api& operator=(const Api&) = delete;

  /// Never throws; unexpected failures become 500 responses.
  ApiResponse handle(const ApiRequest& request);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// "Basic <base64(user:password)>"
std::string basic_authorization(const std::string& user, const std::string& password);

}  // namespace doccat::service
