#pragma once

#include <memory>
#include <string>

#include "ssoprobe/net/http.hpp"

namespace ssoprobe::net {

/// Real-socket transport (plain HTTP).
class SocketTransport final : public HttpTransport {
 public:
  explicit SocketTransport(int timeout_seconds = 10) : timeout_seconds_(timeout_seconds) {}
  HttpResponse send(const HttpRequest& request) override;

 private:
  int timeout_seconds_;
};

/// Serves one HttpService on host:port from a background thread.
class SocketServer {
 public:
  /// `public_origin` is used to rebuild absolute request URLs.
  SocketServer(std::shared_ptr<HttpService> service, std::string public_origin);
  ~SocketServer();
  SocketServer(const SocketServer&) = delete;
  SocketServer& operator=(const SocketServer&) = delete;

  /// port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port);
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();
  void set_public_origin(std::string origin);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ssoprobe::net
