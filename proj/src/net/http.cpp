#include "ssoprobe/net/http.hpp"

#include <algorithm>
#include <cctype>

namespace ssoprobe::net {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

void Headers::add(std::string name, std::string value) {
  entries_.emplace_back(std::move(name), std::move(value));
}

void Headers::set(std::string_view name, std::string value) {
  erase(name);
  entries_.emplace_back(std::string(name), std::move(value));
}

void Headers::erase(std::string_view name) {
  std::erase_if(entries_, [&](const Entry& e) { return iequals(e.first, name); });
}

std::optional<std::string> Headers::get(std::string_view name) const {
  for (const auto& [k, v] : entries_)
    if (iequals(k, name)) return v;
  return std::nullopt;
}

std::vector<std::string> Headers::get_all(std::string_view name) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (iequals(k, name)) out.push_back(v);
  return out;
}

std::string HttpRequest::path() const {
  const auto parsed = openid::parse_url(url);
  return parsed ? parsed->path : "/";
}

openid::QueryParams HttpRequest::params() const {
  openid::QueryParams out;
  if (const auto parsed = openid::parse_url(url)) out = openid::parse_query(parsed->query);
  const auto type = headers.get("Content-Type");
  if (!body.empty() && type && type->starts_with("application/x-www-form-urlencoded")) {
    auto form = openid::parse_query(body);
    out.insert(out.end(), std::make_move_iterator(form.begin()),
               std::make_move_iterator(form.end()));
  }
  return out;
}

std::optional<std::string> HttpRequest::param(std::string_view name) const {
  for (auto& [k, v] : params())
    if (k == name) return v;
  return std::nullopt;
}

std::optional<std::string> HttpRequest::cookie(std::string_view name) const {
  for (const auto& header : headers.get_all("Cookie")) {
    std::string_view rest = header;
    while (!rest.empty()) {
      const auto semi = rest.find(';');
      const auto pair = trim(rest.substr(0, semi));
      const auto eq = pair.find('=');
      if (eq != std::string_view::npos && pair.substr(0, eq) == name)
        return std::string(pair.substr(eq + 1));
      if (semi == std::string_view::npos) break;
      rest.remove_prefix(semi + 1);
    }
  }
  return std::nullopt;
}

HttpResponse HttpResponse::text(int status, std::string body, std::string content_type) {
  HttpResponse r;
  r.status = status;
  r.headers.set("Content-Type", std::move(content_type));
  r.body = std::move(body);
  return r;
}

HttpResponse HttpResponse::redirect(std::string location, int status) {
  HttpResponse r;
  r.status = status;
  r.headers.set("Location", std::move(location));
  return r;
}

HttpResponse HttpResponse::json(int status, std::string body) {
  return text(status, std::move(body), "application/json");
}

std::string form_encode(const openid::QueryParams& fields) { return openid::build_query(fields); }

HttpRequest get_request(std::string url, Headers headers) {
  return HttpRequest{"GET", std::move(url), std::move(headers), {}};
}

HttpRequest post_form(std::string url, const openid::QueryParams& fields) {
  HttpRequest r{"POST", std::move(url), {}, form_encode(fields)};
  r.headers.set("Content-Type", "application/x-www-form-urlencoded");
  return r;
}

}  // namespace ssoprobe::net
