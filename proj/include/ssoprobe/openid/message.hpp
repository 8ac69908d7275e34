#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssoprobe/openid/errors.hpp"

namespace ssoprobe::openid {

inline constexpr std::string_view kOpenId2Namespace = "http://specs.openid.net/auth/2.0";
inline constexpr std::string_view kIdentifierSelect =
    "http://specs.openid.net/auth/2.0/identifier_select";
inline constexpr std::string_view kPrefix = "openid.";

enum class DuplicateResolution { first_wins, last_wins };

/// Ordered multimap of OpenID parameters. Keys are stored in indirect form
/// ("openid.mode"). Duplicates are kept until canonicalized() is called.
class OpenIdMessage {
 public:
  using Param = std::pair<std::string, std::string>;

  OpenIdMessage() = default;
  OpenIdMessage(std::initializer_list<Param> params) : params_(params) {}
  explicit OpenIdMessage(std::vector<Param> params) : params_(std::move(params)) {}

  /// Shorthand for a 2.0 message: sets openid.ns and openid.mode.
  static OpenIdMessage with_mode(std::string_view mode);

  void add(std::string key, std::string value);
  /// Replaces the first occurrence (dropping later ones) or appends.
  void set(std::string_view key, std::string value);
  void erase(std::string_view key);

  std::optional<std::string> first(std::string_view key) const;
  std::optional<std::string> last(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const { return first(key); }
  std::size_t count(std::string_view key) const;
  bool contains(std::string_view key) const { return count(key) > 0; }
  bool has_duplicates() const;

  // Accessors for "openid.<name>" without spelling the prefix.
  std::optional<std::string> field(std::string_view name) const;
  void set_field(std::string_view name, std::string value);
  void erase_field(std::string_view name);
  bool has_field(std::string_view name) const;

  /// One value per key in first-appearance order, per the resolution rule.
  OpenIdMessage canonicalized(DuplicateResolution rule) const;

  /// Only the "openid.*" parameters, in order.
  OpenIdMessage openid_only() const;

  const std::vector<Param>& params() const noexcept { return params_; }
  bool empty() const noexcept { return params_.empty(); }
  std::size_t size() const noexcept { return params_.size(); }

  friend bool operator==(const OpenIdMessage&, const OpenIdMessage&) = default;

 private:
  std::vector<Param> params_;
};

std::string openid_key(std::string_view name);

/// Key-value form: "key:value\n" per parameter, "openid." prefix stripped.
/// Throws CodecError on newlines anywhere or colons in keys.
std::string encode_key_value(const OpenIdMessage& message);
/// Inverse of encode_key_value. Re-adds the "openid." prefix; keeps duplicates.
OpenIdMessage decode_key_value(std::string_view body);

/// Appends the message as percent-encoded query parameters, keeping any
/// query the base URL already has. Throws CodecError on a non-http(s) base.
std::string encode_indirect(const OpenIdMessage& message, std::string_view base_url);
/// All "openid.*" parameters of a query string (or form body).
OpenIdMessage decode_indirect(std::string_view query);

}  // namespace ssoprobe::openid
