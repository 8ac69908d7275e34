#include "ssoprobe/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ssoprobe/openid/url.hpp"
#include "ssoprobe/sp/policy.hpp"

namespace ssoprobe::cli {

std::string TargetEntry::slug() const {
  std::string out;
  for (char c : describe()) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.';
    if (keep) out += c;
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "target" : out;
}

std::pair<std::string, int> split_host_port(const std::string& value) {
  const auto colon = value.rfind(':');
  if (colon == std::string::npos || colon == 0) throw std::invalid_argument("expected host:port, got " + value);
  const auto port_text = value.substr(colon + 1);
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(port_text, &used);
    if (used != port_text.size()) throw std::invalid_argument(port_text);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in " + value);
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("bad port in " + value);
  return {value.substr(0, colon), port};
}

TargetEntry target_from_string(const std::string& value) {
  if (openid::is_absolute_http_url(value)) return {"", value};
  if (sp::is_preset(value)) return {value, ""};
  throw std::invalid_argument("not a preset or http URL: " + value);
}

ToolConfig parse_config(const nlohmann::json& j, ToolConfig c) {
  if (!j.is_object()) throw std::invalid_argument("config must be an object");
  static const std::set<std::string> known = {"idp", "idp_base_url", "api", "targets",
                                              "profile_dir", "report_dir", "verbosity"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw std::invalid_argument("unknown config key " + key);
  try {
    if (j.contains("idp")) {
      c.idp_bind = j["idp"].get<std::string>();
      split_host_port(c.idp_bind);
    }
    if (j.contains("idp_base_url")) c.idp_base_url = j["idp_base_url"].get<std::string>();
    if (j.contains("api")) {
      c.api_bind = j["api"].get<std::string>();
      split_host_port(c.api_bind);
    }
    if (j.contains("targets")) {
      c.targets.clear();
      for (const auto& t : j["targets"]) {
        const bool p = t.contains("preset"), u = t.contains("url");
        if (p == u || t.size() != 1) throw std::invalid_argument("target needs exactly one of preset, url");
        c.targets.push_back(target_from_string(t.at(p ? "preset" : "url").get<std::string>()));
      }
    }
    if (j.contains("profile_dir")) c.profile_dir = j["profile_dir"].get<std::string>();
    if (j.contains("report_dir")) c.report_dir = j["report_dir"].get<std::string>();
    if (j.contains("verbosity")) {
      const auto v = j["verbosity"].get<std::string>();
      if (v == "quiet") c.verbosity = Verbosity::quiet;
      else if (v == "info") c.verbosity = Verbosity::info;
      else if (v == "debug") c.verbosity = Verbosity::debug;
      else throw std::invalid_argument("bad verbosity " + v);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

ToolConfig load_config_file(const std::string& path, ToolConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return parse_config(j, std::move(base));
}

std::optional<std::string> config_path(const std::optional<std::string>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv(kConfigEnv); env && *env) return std::string(env);
  return std::nullopt;
}

}  // namespace ssoprobe::cli
