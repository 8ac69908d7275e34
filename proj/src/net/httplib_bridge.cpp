#include "ssoprobe/net/httplib_bridge.hpp"

#include <httplib.h>

#include <mutex>
#include <thread>

namespace ssoprobe::net {
namespace {

bool skip_header(const std::string& name) {
  return httplib::detail::compare_case_ignore(name, "Content-Length") ||
         httplib::detail::compare_case_ignore(name, "Content-Type");
}

}  // namespace

HttpResponse SocketTransport::send(const HttpRequest& request) {
  const auto url = openid::parse_url(request.url);
  if (!url) throw TransportError("invalid URL: " + request.url);
  if (url->scheme != "http") throw TransportError("only plain http is supported: " + request.url);

  httplib::Client client(url->host, url->effective_port());
  client.set_follow_location(false);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);

  httplib::Request req;
  req.method = request.method;
  req.path = url->path + (url->query.empty() ? "" : "?" + url->query);
  for (const auto& [k, v] : request.headers.entries()) req.headers.emplace(k, v);
  req.body = request.body;
  if (!request.body.empty() && !req.has_header("Content-Type"))
    req.set_header("Content-Type", "application/octet-stream");

  auto result = client.send(req);
  if (!result) throw TransportError(httplib::to_string(result.error()) + ": " + request.url);

  HttpResponse out;
  out.status = result->status;
  for (const auto& [k, v] : result->headers)
    if (!httplib::detail::compare_case_ignore(k, "Content-Length")) out.headers.add(k, v);
  out.body = result->body;
  return out;
}

struct SocketServer::Impl {
  std::shared_ptr<HttpService> service;
  std::string public_origin;
  std::mutex origin_mutex;
  httplib::Server server;
  std::thread thread;

  void serve(const httplib::Request& req, httplib::Response& res) {
    HttpRequest request;
    request.method = req.method;
    {
      std::lock_guard lock(origin_mutex);
      request.url = public_origin + req.target;
    }
    for (const auto& [k, v] : req.headers) request.headers.add(k, v);
    request.body = req.body;
    HttpResponse response;
    try {
      response = service->handle(request);
    } catch (const std::exception& e) {
      response = HttpResponse::text(500, std::string("internal error: ") + e.what());
    }
    res.status = response.status;
    for (const auto& [k, v] : response.headers.entries())
      if (!skip_header(k)) res.headers.emplace(k, v);
    res.set_content(response.body,
                    response.headers.get("Content-Type").value_or("text/plain"));
  }
};

SocketServer::SocketServer(std::shared_ptr<HttpService> service, std::string public_origin)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  impl_->public_origin = std::move(public_origin);
  auto handler = [impl = impl_.get()](const httplib::Request& req, httplib::Response& res) {
    impl->serve(req, res);
  };
  // SO_REUSEADDR only: httplib's default SO_REUSEPORT lets a second
  // server bind an occupied port silently.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Put(".*", handler);
  impl_->server.Delete(".*", handler);
}

SocketServer::~SocketServer() { stop(); }

void SocketServer::set_public_origin(std::string origin) {
  std::lock_guard lock(impl_->origin_mutex);
  impl_->public_origin = std::move(origin);
}

int SocketServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void SocketServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void SocketServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace ssoprobe::net
