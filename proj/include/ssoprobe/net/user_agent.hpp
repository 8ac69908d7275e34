#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "ssoprobe/net/http.hpp"

namespace ssoprobe::net {

/// Browser model: per-host cookie jar and redirect following.
class UserAgent {
 public:
  /// Returns true to stop before the redirect target is requested.
  using StopPredicate = std::function<bool(const std::string& url)>;

  struct Result {
    HttpResponse response;
    std::string url;                  // URL that produced `response`
    std::optional<std::string> held;  // redirect target withheld by the predicate
  };

  explicit UserAgent(HttpTransport& transport, int max_redirects = 10);

  Result navigate(HttpRequest request, const StopPredicate& stop = {});
  Result get(const std::string& url, const StopPredicate& stop = {});
  Result post(const std::string& url, const openid::QueryParams& fields,
              const StopPredicate& stop = {});

  void clear_cookies() { jar_.clear(); }
  std::optional<std::string> cookie(const std::string& host, const std::string& name) const;

 private:
  void attach_cookies(HttpRequest& request) const;
  void store_cookies(const std::string& url, const HttpResponse& response);

  HttpTransport& transport_;
  int max_redirects_;
  std::map<std::string, std::map<std::string, std::string>> jar_;
};

/// Resolves a Location header against the URL it came from.
std::string resolve_location(const std::string& base, const std::string& location);

}  // namespace ssoprobe::net
