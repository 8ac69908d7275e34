#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssoprobe/openid/url.hpp"

namespace ssoprobe::net {

/// Header list with case-insensitive lookup. Order and duplicates are kept.
class Headers {
 public:
  using Entry = std::pair<std::string, std::string>;

  Headers() = default;
  Headers(std::initializer_list<Entry> entries) : entries_(entries) {}

  void add(std::string name, std::string value);
  /// Replaces every header with this name.
  void set(std::string_view name, std::string value);
  void erase(std::string_view name);
  std::optional<std::string> get(std::string_view name) const;
  std::vector<std::string> get_all(std::string_view name) const;
  bool contains(std::string_view name) const { return get(name).has_value(); }

  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  std::vector<Entry> entries_;
};

struct HttpRequest {
  std::string method = "GET";
  std::string url;  // absolute
  Headers headers;
  std::string body;

  /// Path of `url`, "/" when absent.
  std::string path() const;
  /// Query parameters of `url` followed by form fields of a urlencoded body.
  openid::QueryParams params() const;
  std::optional<std::string> param(std::string_view name) const;
  std::optional<std::string> cookie(std::string_view name) const;
};

struct HttpResponse {
  int status = 200;
  Headers headers;
  std::string body;

  bool is_redirect() const { return status >= 300 && status < 400 && headers.contains("Location"); }

  static HttpResponse text(int status, std::string body, std::string content_type = "text/plain");
  static HttpResponse redirect(std::string location, int status = 302);
  static HttpResponse json(int status, std::string body);
};

/// Connection-level failure (unknown host, refused, timeout).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Throws TransportError when no response could be obtained.
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

class HttpService {
 public:
  virtual ~HttpService() = default;
  virtual HttpResponse handle(const HttpRequest& request) = 0;
};

using Handler = std::function<HttpResponse(const HttpRequest&)>;

class FunctionService final : public HttpService {
 public:
  explicit FunctionService(Handler handler) : handler_(std::move(handler)) {}
  HttpResponse handle(const HttpRequest& request) override { return handler_(request); }

 private:
  Handler handler_;
};

std::string form_encode(const openid::QueryParams& fields);

HttpRequest get_request(std::string url, Headers headers = {});
HttpRequest post_form(std::string url, const openid::QueryParams& fields);

}  // namespace ssoprobe::net
