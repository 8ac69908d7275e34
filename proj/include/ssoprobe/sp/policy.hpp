#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ssoprobe/discovery/xml.hpp"
#include "ssoprobe/openid/association.hpp"
#include "ssoprobe/openid/message.hpp"

namespace ssoprobe::sp {

/// How the login-time (claimed_id, op_endpoint) pair is kept in the session.
enum class SessionBinding { none, overwritable, immutable };
enum class KeyLookup { by_handle, by_idp_and_handle };

std::string_view to_string(SessionBinding b);
std::string_view to_string(KeyLookup k);

struct VerificationPolicy {
  bool check_return_to = true;
  bool check_nonce = true;
  std::int64_t nonce_window = 3600;
  bool require_signed_set = true;
  bool rediscover_always = true;
  bool rediscover_on_mismatch = true;
  SessionBinding session_binding = SessionBinding::immutable;
  KeyLookup key_lookup = KeyLookup::by_idp_and_handle;
  bool use_direct_verification = false;
  bool trust_discovered_local_id = false;
  bool reject_duplicate_params = true;
  openid::DuplicateResolution duplicate_resolution = openid::DuplicateResolution::last_wins;
  discovery::XxeMode xxe = discovery::XxeMode::reject;
  openid::AssocType assoc_type = openid::AssocType::hmac_sha256;
  openid::SessionType session_type = openid::SessionType::dh_sha256;

  friend bool operator==(const VerificationPolicy&, const VerificationPolicy&) = default;
};

nlohmann::ordered_json to_json(const VerificationPolicy& policy);
/// Missing keys keep the value from `base`. Throws std::invalid_argument.
VerificationPolicy policy_from_json(const nlohmann::ordered_json& j,
                                    const VerificationPolicy& base = {});

/// Fully hardened reference policy.
VerificationPolicy hardened_policy();

/// The sixteen emulated relying-party libraries, in table order.
const std::vector<std::string>& preset_names();
/// Any preset name, including "hardened". Throws std::invalid_argument.
VerificationPolicy load_preset(std::string_view name);
bool is_preset(std::string_view name);

}  // namespace ssoprobe::sp
