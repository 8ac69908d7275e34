#include "ssoprobe/openid/message.hpp"

#include <algorithm>
#include <set>

#include "ssoprobe/openid/url.hpp"

namespace ssoprobe::openid {

std::string openid_key(std::string_view name) {
  std::string key(kPrefix);
  key += name;
  return key;
}

OpenIdMessage OpenIdMessage::with_mode(std::string_view mode) {
  OpenIdMessage message;
  message.add("openid.ns", std::string(kOpenId2Namespace));
  message.add("openid.mode", std::string(mode));
  return message;
}

void OpenIdMessage::add(std::string key, std::string value) {
  params_.emplace_back(std::move(key), std::move(value));
}

void OpenIdMessage::set(std::string_view key, std::string value) {
  auto it = std::find_if(params_.begin(), params_.end(),
                         [&](const Param& p) { return p.first == key; });
  if (it == params_.end()) {
    params_.emplace_back(std::string(key), std::move(value));
    return;
  }
  it->second = std::move(value);
  params_.erase(std::remove_if(std::next(it), params_.end(),
                               [&](const Param& p) { return p.first == key; }),
                params_.end());
}

void OpenIdMessage::erase(std::string_view key) {
  params_.erase(std::remove_if(params_.begin(), params_.end(),
                               [&](const Param& p) { return p.first == key; }),
                params_.end());
}

std::optional<std::string> OpenIdMessage::first(std::string_view key) const {
  for (const auto& [k, v] : params_)
    if (k == key) return v;
  return std::nullopt;
}

std::optional<std::string> OpenIdMessage::last(std::string_view key) const {
  for (auto it = params_.rbegin(); it != params_.rend(); ++it)
    if (it->first == key) return it->second;
  return std::nullopt;
}

std::size_t OpenIdMessage::count(std::string_view key) const {
  return static_cast<std::size_t>(
      std::count_if(params_.begin(), params_.end(), [&](const Param& p) { return p.first == key; }));
}

bool OpenIdMessage::has_duplicates() const {
  std::set<std::string_view> seen;
  for (const auto& p : params_)
    if (!seen.insert(p.first).second) return true;
  return false;
}

std::optional<std::string> OpenIdMessage::field(std::string_view name) const {
  return first(openid_key(name));
}

void OpenIdMessage::set_field(std::string_view name, std::string value) {
  set(openid_key(name), std::move(value));
}

void OpenIdMessage::erase_field(std::string_view name) { erase(openid_key(name)); }

bool OpenIdMessage::has_field(std::string_view name) const { return contains(openid_key(name)); }

OpenIdMessage OpenIdMessage::canonicalized(DuplicateResolution rule) const {
  OpenIdMessage out;
  std::set<std::string_view> done;
  for (const auto& p : params_) {
    if (!done.insert(p.first).second) continue;
    const auto value = rule == DuplicateResolution::first_wins ? first(p.first) : last(p.first);
    out.add(p.first, *value);
  }
  return out;
}

OpenIdMessage OpenIdMessage::openid_only() const {
  OpenIdMessage out;
  for (const auto& p : params_)
    if (p.first.starts_with(kPrefix)) out.add(p.first, p.second);
  return out;
}

std::string encode_key_value(const OpenIdMessage& message) {
  std::string out;
  for (const auto& [key, value] : message.params()) {
    std::string_view name = key;
    if (name.starts_with(kPrefix)) name.remove_prefix(kPrefix.size());
    if (name.find_first_of(":\n") != std::string_view::npos)
      throw CodecError("key-value form: forbidden character in key '" + key + "'");
    if (value.find('\n') != std::string::npos)
      throw CodecError("key-value form: newline in value of '" + key + "'");
    out.append(name);
    out.push_back(':');
    out.append(value);
    out.push_back('\n');
  }
  return out;
}

OpenIdMessage decode_key_value(std::string_view body) {
  OpenIdMessage message;
  std::size_t line_no = 0;
  while (!body.empty()) {
    ++line_no;
    const auto nl = body.find('\n');
    std::string_view line = body.substr(0, nl);
    body = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos)
      throw CodecError("key-value form: line " + std::to_string(line_no) + " has no colon");
    message.add(openid_key(line.substr(0, colon)), std::string(line.substr(colon + 1)));
  }
  return message;
}

std::string encode_indirect(const OpenIdMessage& message, std::string_view base_url) {
  if (!is_absolute_http_url(base_url))
    throw CodecError("indirect message needs an absolute http(s) URL, got '" +
                     std::string(base_url) + "'");
  return append_query(base_url, message.params());
}

OpenIdMessage decode_indirect(std::string_view query) {
  return OpenIdMessage(parse_query(query)).openid_only();
}

}  // namespace ssoprobe::openid
