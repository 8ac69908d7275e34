#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ssoprobe::openid {

/// Parsed absolute http(s) URL. Scheme and host are lower-cased on parse.
struct Url {
  std::string scheme;
  std::string host;
  int port = 0;  // 0 means the scheme default
  std::string path = "/";
  std::string query;
  std::string fragment;

  int effective_port() const;
  std::string origin() const;
  std::string without_query() const;
  std::string str() const;
};

std::optional<Url> parse_url(std::string_view text);
bool is_absolute_http_url(std::string_view text);

using QueryParams = std::vector<std::pair<std::string, std::string>>;

// Unreserved characters (RFC 3986) pass through, everything else is %XX.
std::string percent_encode(std::string_view text);
// Decodes %XX and '+'; malformed escapes are kept literally.
std::string percent_decode(std::string_view text);

QueryParams parse_query(std::string_view query);
std::string build_query(const QueryParams& params);
std::string append_query(std::string_view url, const QueryParams& params);

/// Account-key normalization: scheme and host lower-cased, nothing else.
std::string normalize_identifier(std::string_view identifier);

}  // namespace ssoprobe::openid
