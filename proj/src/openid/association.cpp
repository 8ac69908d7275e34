#include "ssoprobe/openid/association.hpp"

#include <algorithm>

namespace ssoprobe::openid {

std::string_view to_string(AssocType type) {
  return type == AssocType::hmac_sha1 ? "HMAC-SHA1" : "HMAC-SHA256";
}

std::string_view to_string(SessionType type) {
  switch (type) {
    case SessionType::no_encryption: return "no-encryption";
    case SessionType::dh_sha1: return "DH-SHA1";
    case SessionType::dh_sha256: return "DH-SHA256";
  }
  return "";
}

std::optional<AssocType> parse_assoc_type(std::string_view text) {
  if (text == "HMAC-SHA1") return AssocType::hmac_sha1;
  if (text == "HMAC-SHA256") return AssocType::hmac_sha256;
  return std::nullopt;
}

std::optional<SessionType> parse_session_type(std::string_view text) {
  if (text == "no-encryption") return SessionType::no_encryption;
  if (text == "DH-SHA1") return SessionType::dh_sha1;
  if (text == "DH-SHA256") return SessionType::dh_sha256;
  return std::nullopt;
}

HashAlgorithm mac_hash(AssocType type) {
  return type == AssocType::hmac_sha1 ? HashAlgorithm::sha1 : HashAlgorithm::sha256;
}

std::size_t mac_key_size(AssocType type) { return digest_size(mac_hash(type)); }

std::optional<HashAlgorithm> session_hash(SessionType type) {
  switch (type) {
    case SessionType::no_encryption: return std::nullopt;
    case SessionType::dh_sha1: return HashAlgorithm::sha1;
    case SessionType::dh_sha256: return HashAlgorithm::sha256;
  }
  return std::nullopt;
}

std::optional<std::int64_t> lifetime_preset(std::string_view name) {
  for (const auto& preset : kLifetimePresets)
    if (preset.name == name) return preset.seconds;
  return std::nullopt;
}

bool valid_handle(std::string_view handle) {
  if (handle.empty() || handle.size() > 255) return false;
  return std::all_of(handle.begin(), handle.end(), [](char c) { return c >= 0x21 && c <= 0x7E; });
}

void AssociationStore::store(Association association) {
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(association));
}

std::optional<Association> AssociationStore::find(std::string_view handle) const {
  std::lock_guard lock(mutex_);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->handle == handle) return *it;
  return std::nullopt;
}

std::optional<Association> AssociationStore::find(std::string_view op_endpoint,
                                                  std::string_view handle) const {
  std::lock_guard lock(mutex_);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->handle == handle && it->op_endpoint == op_endpoint) return *it;
  return std::nullopt;
}

std::optional<Association> AssociationStore::find_usable(std::string_view op_endpoint,
                                                         std::int64_t now) const {
  std::lock_guard lock(mutex_);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->op_endpoint == op_endpoint && !it->expired(now)) return *it;
  return std::nullopt;
}

void AssociationStore::remove(std::string_view op_endpoint, std::string_view handle) {
  std::lock_guard lock(mutex_);
  std::erase_if(entries_, [&](const Association& a) {
    return a.handle == handle && a.op_endpoint == op_endpoint;
  });
}

void AssociationStore::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
}

std::size_t AssociationStore::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace ssoprobe::openid
