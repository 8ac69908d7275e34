#include "ssoprobe/net/in_memory.hpp"

namespace ssoprobe::net {

void InMemoryNetwork::mount(const std::string& origin, std::shared_ptr<HttpService> service) {
  std::lock_guard lock(mutex_);
  services_[origin] = std::move(service);
}

void InMemoryNetwork::unmount(const std::string& origin) {
  std::lock_guard lock(mutex_);
  services_.erase(origin);
}

bool InMemoryNetwork::has(const std::string& origin) const {
  std::lock_guard lock(mutex_);
  return services_.contains(origin);
}

HttpResponse InMemoryNetwork::send(const HttpRequest& request) {
  const auto url = openid::parse_url(request.url);
  if (!url) throw TransportError("invalid URL: " + request.url);
  std::shared_ptr<HttpService> service;
  std::uint64_t id = 0;
  {
    std::lock_guard lock(mutex_);
    id = ++next_id_;
    exchanges_.push_back({request, 0, {}, id, {}});
    if (const auto it = services_.find(url->origin()); it != services_.end()) service = it->second;
  }
  if (!service) throw TransportError("connection refused: " + url->origin());
  // Handlers may call back into the network, so the lock is not held here.
  HttpResponse response = service->handle(request);
  {
    std::lock_guard lock(mutex_);
    for (auto it = exchanges_.rbegin(); it != exchanges_.rend(); ++it) {
      if (it->id == id) {
        it->status = response.status;
        it->response_body = response.body;
        it->location = response.headers.get("Location").value_or("");
        break;
      }
    }
  }
  return response;
}

std::vector<InMemoryNetwork::Exchange> InMemoryNetwork::exchanges() const {
  std::lock_guard lock(mutex_);
  return exchanges_;
}

void InMemoryNetwork::clear_exchanges() {
  std::lock_guard lock(mutex_);
  exchanges_.clear();
}

}  // namespace ssoprobe::net
