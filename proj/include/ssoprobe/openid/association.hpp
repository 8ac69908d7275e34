#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssoprobe/openid/crypto.hpp"

namespace ssoprobe::openid {

enum class AssocType { hmac_sha1, hmac_sha256 };
enum class SessionType { no_encryption, dh_sha1, dh_sha256 };

std::string_view to_string(AssocType type);
std::string_view to_string(SessionType type);
std::optional<AssocType> parse_assoc_type(std::string_view text);
std::optional<SessionType> parse_session_type(std::string_view text);

HashAlgorithm mac_hash(AssocType type);
std::size_t mac_key_size(AssocType type);
/// Digest used for the DH session; nullopt for no-encryption.
std::optional<HashAlgorithm> session_hash(SessionType type);

inline constexpr std::int64_t kDefaultAssociationLifetime = 3600;

/// Lifetimes observed at large IdPs, usable as canned presets.
struct LifetimePreset {
  std::string_view name;
  std::int64_t seconds;
};
inline constexpr LifetimePreset kLifetimePresets[] = {
    {"yahoo", 4 * 3600},
    {"google", 13 * 3600},
    {"myopenid", 14 * 24 * 3600},
};
std::optional<std::int64_t> lifetime_preset(std::string_view name);

struct Association {
  std::string handle;
  Bytes mac_key;
  AssocType assoc_type = AssocType::hmac_sha256;
  SessionType session_type = SessionType::dh_sha256;
  std::int64_t issued_at = 0;
  std::int64_t expires_in = kDefaultAssociationLifetime;
  std::string op_endpoint;

  bool expired(std::int64_t now) const { return now >= issued_at + expires_in; }
};

/// Handle ≤ 255 visible ASCII characters.
bool valid_handle(std::string_view handle);

/// Thread-safe association table. Handles are not unique: the same handle may
/// be stored for several endpoints, and find(handle) returns the most recent.
class AssociationStore {
 public:
  void store(Association association);
  std::optional<Association> find(std::string_view handle) const;
  std::optional<Association> find(std::string_view op_endpoint, std::string_view handle) const;
  /// Most recent unexpired association for the endpoint.
  std::optional<Association> find_usable(std::string_view op_endpoint, std::int64_t now) const;
  void remove(std::string_view op_endpoint, std::string_view handle);
  void clear();
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Association> entries_;
};

}  // namespace ssoprobe::openid
