#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ssoprobe/openid/association.hpp"
#include "ssoprobe/openid/message.hpp"

namespace ssoprobe::openid {

/// Fields a positive assertion must sign (claimed_id/identity only when present).
inline constexpr std::string_view kRequiredSignedFields[] = {
    "op_endpoint", "return_to", "response_nonce", "assoc_handle", "claimed_id", "identity",
};

struct PositiveAssertion {
  std::string op_endpoint;
  std::string return_to;
  std::string claimed_id;
  std::string identity;
  std::string response_nonce;
  std::string assoc_handle;
};

/// Unsigned id_res message with the standard signed list.
OpenIdMessage make_positive_assertion(const PositiveAssertion& fields);

/// Field names listed in openid.signed, without the "openid." prefix.
std::vector<std::string> signed_fields(const OpenIdMessage& token);
std::string join_signed(const std::vector<std::string>& fields);

/// Key-value string over the signed fields in `signed` order.
/// Throws MissingSignedField naming the first absent field.
std::string signature_base_string(const OpenIdMessage& token);

std::string sign_token(const OpenIdMessage& token, const Association& association);
/// sign_token + writes openid.sig.
void apply_signature(OpenIdMessage& token, const Association& association);
/// Constant-time comparison of the recomputed signature; malformed tokens are false.
bool verify_signature(const OpenIdMessage& token, const Association& association);

}  // namespace ssoprobe::openid
