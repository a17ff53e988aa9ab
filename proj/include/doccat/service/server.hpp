#pragma once

#include <memory>

#include "doccat/service/api.hpp"
#include "doccat/service/config.hpp"

namespace doccat::service {

/// The running service: repository, task queue, worker pool and an HTTP
/// server exposing the Api.
class Server {
 public:
  /// Creates DATA_ROOT when missing, opens the repository, registers the
  /// trainers and starts the worker pool.
  explicit Server(ServiceConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the configured address. Port 0 picks a free port. Returns the
  /// bound port.
  int bind();
  /// Serves requests on the calling thread until stop().
  void listen();
  /// Binds when needed and serves on a background thread.
  void start();
  void stop();
  int port() const;

  const ServiceConfig& config() const;
  repo::Repository& repository();
  worker::WorkerPool& pool();
  Api& api();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace doccat::service
