#include "doccat/service/server.hpp"

#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "doccat/common/error.hpp"
#include "doccat/worker/runners.hpp"

namespace doccat::service {

namespace {

std::filesystem::path prepare_root(const std::filesystem::path& root) {
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw StorageError("cannot create DATA_ROOT " + root.string() + ": " + ec.message());
  const auto probe = root / ".write-test";
  {
    std::ofstream out(probe);
    if (!out) throw StorageError("DATA_ROOT " + root.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
  return std::filesystem::absolute(root);
}

worker::WorkerOptions worker_options(const ServiceConfig& c) {
  worker::WorkerOptions o;
  o.training_workers = c.training_workers;
  o.classification_workers = c.classification_workers;
  if (c.embeddings) o.default_embeddings = classifiers::EmbeddingReference{*c.embeddings, c.embeddings_format};
  return o;
}

}  // namespace

struct Server::Impl {
  ServiceConfig config;
  repo::Repository repository;
  worker::TaskQueue queue;
  worker::WorkerPool pool;
  Api api;
  httplib::Server http;
  int port = -1;
  std::thread thread;

  explicit Impl(ServiceConfig c)
      : config(std::move(c)),
        repository({prepare_root(config.data_root), config.database, config.database_echo}),
        queue(repository),
        pool(queue, worker_options(config)),
        api(pool, {config.auth, config.users, config.classify_timeout}) {
    worker::register_trainers(repository);
    pool.start();

    const auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      ApiRequest request{req.method, req.path, {}, req.get_header_value("Authorization"), req.body};
      for (const auto& [key, value] : req.params) request.query.emplace(key, value);
      const auto response = api.handle(request);
      res.status = response.status;
      for (const auto& [key, value] : response.headers) res.set_header(key, value);
      if (!response.content_type.empty()) res.set_content(response.body, response.content_type);
    };
    http.Get(".*", handler);
    http.Post(".*", handler);
    http.Put(".*", handler);
    http.Delete(".*", handler);
    http.Patch(".*", handler);
    http.Options(".*", handler);
    http.set_logger([](const httplib::Request& req, const httplib::Response& res) {
      spdlog::info("{} {} {}", req.method, req.path, res.status);
    });
  }
};

Server::Server(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Server::~Server() { stop(); }

int Server::bind() {
  if (impl_->port >= 0) return impl_->port;
  const auto& c = impl_->config;
  if (c.port == 0) {
    impl_->port = impl_->http.bind_to_any_port(c.host);
  } else if (impl_->http.bind_to_port(c.host, c.port)) {
    impl_->port = c.port;
  }
  if (impl_->port < 0) throw StorageError(fmt::format("cannot bind {}:{}", c.host, c.port));
  spdlog::info("listening on http://{}:{}/", c.host, impl_->port);
  return impl_->port;
}

void Server::listen() {
  bind();
  impl_->http.listen_after_bind();
}

void Server::start() {
  bind();
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
}

void Server::stop() {
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->pool.stop();
}

int Server::port() const { return impl_->port; }
const ServiceConfig& Server::config() const { return impl_->config; }
repo::Repository& Server::repository() { return impl_->repository; }
worker::WorkerPool& Server::pool() { return impl_->pool; }
Api& Server::api() { return impl_->api; }

}  // namespace doccat::service
