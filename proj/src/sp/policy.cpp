#include "ssoprobe/sp/policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace ssoprobe::sp {
namespace {

using openid::DuplicateResolution;

template <typename Enum, std::size_t N>
Enum parse_enum(const std::pair<Enum, std::string_view> (&table)[N], const std::string& text,
                const char* what) {
  for (const auto& [value, name] : table)
    if (name == text) return value;
  throw std::invalid_argument(std::string("unknown ") + what + ": " + text);
}

constexpr std::pair<SessionBinding, std::string_view> kBindings[] = {
    {SessionBinding::none, "none"},
    {SessionBinding::overwritable, "overwritable"},
    {SessionBinding::immutable, "immutable"},
};
constexpr std::pair<KeyLookup, std::string_view> kLookups[] = {
    {KeyLookup::by_handle, "by_handle"},
    {KeyLookup::by_idp_and_handle, "by_idp_and_handle"},
};
constexpr std::pair<DuplicateResolution, std::string_view> kDuplicates[] = {
    {DuplicateResolution::first_wins, "first_wins"},
    {DuplicateResolution::last_wins, "last_wins"},
};

VerificationPolicy no_rediscovery(VerificationPolicy p) {
  p.rediscover_always = false;
  p.rediscover_on_mismatch = false;
  return p;
}

VerificationPolicy make_preset(std::string_view name) {
  VerificationPolicy p = hardened_policy();
  if (name == "hardened" || name == "dotnet-openauth" || name == "janrain" ||
      name == "libopkele" || name == "openid4java")
    return p;
  if (name == "lightopenid") {
    p.use_direct_verification = true;
    return p;
  }
  if (name == "cf-openid") {
    p = no_rediscovery(p);
    p.check_return_to = false;
    p.require_signed_set = false;
    p.session_binding = SessionBinding::none;
    p.xxe = discovery::XxeMode::flag;
    return p;
  }
  if (name == "drupal") {
    p.rediscover_always = false;
    p.rediscover_on_mismatch = true;
    p.session_binding = SessionBinding::overwritable;
    p.key_lookup = KeyLookup::by_handle;
    p.xxe = discovery::XxeMode::flag;
    return p;
  }
  if (name == "dyuproject" || name == "joid") {
    p = no_rediscovery(p);
    p.check_return_to = false;
    p.session_binding = SessionBinding::overwritable;
    p.xxe = discovery::XxeMode::flag;
    return p;
  }
  if (name == "jopenid") {
    p = no_rediscovery(p);
    p.session_binding = SessionBinding::overwritable;
    p.xxe = discovery::XxeMode::flag;
    return p;
  }
  if (name == "net-openid-consumer") {
    p.check_return_to = false;
    p.rediscover_on_mismatch = false;
    p.xxe = discovery::XxeMode::resolve_unsafe;
    return p;
  }
  if (name == "openid-cfc") {
    p = no_rediscovery(p);
    p.require_signed_set = false;
    p.session_binding = SessionBinding::overwritable;
    p.xxe = discovery::XxeMode::resolve_unsafe;
    return p;
  }
  if (name == "openid-node") {
    p.check_return_to = false;
    p.rediscover_on_mismatch = false;
    p.require_signed_set = false;
    p.xxe = discovery::XxeMode::flag;
    return p;
  }
  if (name == "simple-openid-php") {
    p.check_return_to = false;
    p.use_direct_verification = true;
    p.rediscover_on_mismatch = false;
    p.trust_discovered_local_id = true;
    p.session_binding = SessionBinding::overwritable;
    p.xxe = discovery::XxeMode::flag;
    return p;
  }
  if (name == "sourceforge") {
    p = no_rediscovery(p);
    p.key_lookup = KeyLookup::by_handle;
    p.session_binding = SessionBinding::overwritable;
    p.xxe = discovery::XxeMode::flag;
    return p;
  }
  if (name == "zend") {
    p.rediscover_on_mismatch = false;
    p.key_lookup = KeyLookup::by_handle;
    p.require_signed_set = false;
    p.session_binding = SessionBinding::overwritable;
    p.xxe = discovery::XxeMode::flag;
    return p;
  }
  throw std::invalid_argument("unknown preset: " + std::string(name));
}

}  // namespace

std::string_view to_string(SessionBinding b) {
  for (const auto& [v, n] : kBindings)
    if (v == b) return n;
  return "none";
}

std::string_view to_string(KeyLookup k) {
  for (const auto& [v, n] : kLookups)
    if (v == k) return n;
  return "by_handle";
}

nlohmann::ordered_json to_json(const VerificationPolicy& p) {
  nlohmann::ordered_json j;
  j["check_return_to"] = p.check_return_to;
  j["check_nonce"] = p.check_nonce;
  j["nonce_window"] = p.nonce_window;
  j["require_signed_set"] = p.require_signed_set;
  j["rediscover_always"] = p.rediscover_always;
  j["rediscover_on_mismatch"] = p.rediscover_on_mismatch;
  j["session_binding"] = std::string(to_string(p.session_binding));
  j["key_lookup"] = std::string(to_string(p.key_lookup));
  j["use_direct_verification"] = p.use_direct_verification;
  j["trust_discovered_local_id"] = p.trust_discovered_local_id;
  j["reject_duplicate_params"] = p.reject_duplicate_params;
  j["duplicate_resolution"] =
      p.duplicate_resolution == DuplicateResolution::first_wins ? "first_wins" : "last_wins";
  j["xxe"] = std::string(discovery::to_string(p.xxe));
  j["assoc_type"] = std::string(openid::to_string(p.assoc_type));
  j["session_type"] = std::string(openid::to_string(p.session_type));
  return j;
}

VerificationPolicy policy_from_json(const nlohmann::ordered_json& j,
                                    const VerificationPolicy& base) {
  if (!j.is_object()) throw std::invalid_argument("policy must be a JSON object");
  VerificationPolicy p = base;
  auto flag = [&](const char* key, bool& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) throw std::invalid_argument(std::string(key) + " must be a boolean");
    out = j[key].get<bool>();
  };
  auto text = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_string()) throw std::invalid_argument(std::string(key) + " must be a string");
    return j[key].get<std::string>();
  };
  static const std::vector<std::string> kKnown = {
      "check_return_to", "check_nonce", "nonce_window", "require_signed_set",
      "rediscover_always", "rediscover_on_mismatch", "session_binding", "key_lookup",
      "use_direct_verification", "trust_discovered_local_id", "reject_duplicate_params",
      "duplicate_resolution", "xxe", "assoc_type", "session_type"};
  for (const auto& [key, value] : j.items())
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end())
      throw std::invalid_argument("unknown policy field: " + key);

  flag("check_return_to", p.check_return_to);
  flag("check_nonce", p.check_nonce);
  if (j.contains("nonce_window")) {
    if (!j["nonce_window"].is_number_integer() || j["nonce_window"].get<std::int64_t>() < 0)
      throw std::invalid_argument("nonce_window must be a non-negative integer");
    p.nonce_window = j["nonce_window"].get<std::int64_t>();
  }
  flag("require_signed_set", p.require_signed_set);
  flag("rediscover_always", p.rediscover_always);
  flag("rediscover_on_mismatch", p.rediscover_on_mismatch);
  if (auto s = text("session_binding")) p.session_binding = parse_enum(kBindings, *s, "session_binding");
  if (auto s = text("key_lookup")) p.key_lookup = parse_enum(kLookups, *s, "key_lookup");
  flag("use_direct_verification", p.use_direct_verification);
  flag("trust_discovered_local_id", p.trust_discovered_local_id);
  flag("reject_duplicate_params", p.reject_duplicate_params);
  if (auto s = text("duplicate_resolution"))
    p.duplicate_resolution = parse_enum(kDuplicates, *s, "duplicate_resolution");
  if (auto s = text("xxe")) {
    const auto mode = discovery::parse_xxe_mode(*s);
    if (!mode) throw std::invalid_argument("unknown xxe mode: " + *s);
    p.xxe = *mode;
  }
  if (auto s = text("assoc_type")) {
    const auto t = openid::parse_assoc_type(*s);
    if (!t) throw std::invalid_argument("unknown assoc_type: " + *s);
    p.assoc_type = *t;
  }
  if (auto s = text("session_type")) {
    const auto t = openid::parse_session_type(*s);
    if (!t) throw std::invalid_argument("unknown session_type: " + *s);
    p.session_type = *t;
  }
  return p;
}

VerificationPolicy hardened_policy() { return VerificationPolicy{}; }

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> kNames = {
      "cf-openid",  "dotnet-openauth",     "drupal",     "dyuproject",
      "janrain",    "joid",                "jopenid",    "libopkele",
      "lightopenid", "net-openid-consumer", "openid4java", "openid-cfc",
      "openid-node", "simple-openid-php",  "sourceforge", "zend",
  };
  return kNames;
}

VerificationPolicy load_preset(std::string_view name) { return make_preset(name); }

bool is_preset(std::string_view name) {
  try {
    make_preset(name);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace ssoprobe::sp
