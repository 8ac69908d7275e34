#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ssoprobe/net/http.hpp"

namespace ssoprobe::net {

/// Routes requests to services by origin ("https://host[:port]").
class InMemoryNetwork final : public HttpTransport {
 public:
  struct Exchange {
    HttpRequest request;
    int status = 0;  // 0 when no service answered
    std::string response_body;
    std::uint64_t id = 0;
    std::string location;  // Location header of a redirect
  };

  void mount(const std::string& origin, std::shared_ptr<HttpService> service);
  void unmount(const std::string& origin);
  bool has(const std::string& origin) const;

  HttpResponse send(const HttpRequest& request) override;

  std::vector<Exchange> exchanges() const;
  void clear_exchanges();

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<HttpService>> services_;
  std::vector<Exchange> exchanges_;
  std::uint64_t next_id_ = 0;
};

}  // namespace ssoprobe::net
