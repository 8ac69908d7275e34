#include "ssoprobe/net/user_agent.hpp"

namespace ssoprobe::net {

std::string resolve_location(const std::string& base, const std::string& location) {
  if (openid::is_absolute_http_url(location)) return location;
  const auto url = openid::parse_url(base);
  if (!url) return location;
  if (location.starts_with("//")) return url->scheme + ":" + location;
  if (location.starts_with("/")) return url->origin() + location;
  auto dir = url->path.substr(0, url->path.rfind('/') + 1);
  return url->origin() + dir + location;
}

UserAgent::UserAgent(HttpTransport& transport, int max_redirects)
    : transport_(transport), max_redirects_(max_redirects) {}

std::optional<std::string> UserAgent::cookie(const std::string& host,
                                             const std::string& name) const {
  const auto it = jar_.find(host);
  if (it == jar_.end()) return std::nullopt;
  const auto c = it->second.find(name);
  if (c == it->second.end()) return std::nullopt;
  return c->second;
}

void UserAgent::attach_cookies(HttpRequest& request) const {
  const auto url = openid::parse_url(request.url);
  if (!url) return;
  const auto it = jar_.find(url->host);
  if (it == jar_.end() || it->second.empty()) return;
  std::string header;
  for (const auto& [k, v] : it->second) {
    if (!header.empty()) header += "; ";
    header += k + "=" + v;
  }
  request.headers.set("Cookie", header);
}

void UserAgent::store_cookies(const std::string& url, const HttpResponse& response) {
  const auto parsed = openid::parse_url(url);
  if (!parsed) return;
  for (const auto& line : response.headers.get_all("Set-Cookie")) {
    const auto pair = line.substr(0, line.find(';'));
    const auto eq = pair.find('=');
    if (eq == std::string::npos) continue;
    auto& host = jar_[parsed->host];
    const auto name = pair.substr(0, eq);
    const auto value = pair.substr(eq + 1);
    if (value.empty())
      host.erase(name);
    else
      host[name] = value;
  }
}

UserAgent::Result UserAgent::navigate(HttpRequest request, const StopPredicate& stop) {
  for (int hop = 0;; ++hop) {
    attach_cookies(request);
    HttpResponse response = transport_.send(request);
    store_cookies(request.url, response);
    if (!response.is_redirect() || hop >= max_redirects_)
      return {std::move(response), request.url, std::nullopt};
    std::string next = resolve_location(request.url, *response.headers.get("Location"));
    if (stop && stop(next)) return {std::move(response), request.url, std::move(next)};
    request = get_request(std::move(next));
  }
}

UserAgent::Result UserAgent::get(const std::string& url, const StopPredicate& stop) {
  return navigate(get_request(url), stop);
}

UserAgent::Result UserAgent::post(const std::string& url, const openid::QueryParams& fields,
                                  const StopPredicate& stop) {
  return navigate(post_form(url, fields), stop);
}

}  // namespace ssoprobe::net
