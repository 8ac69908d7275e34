#include "ssoprobe/openid/token.hpp"

#include "ssoprobe/openid/crypto.hpp"
#include "ssoprobe/openid/errors.hpp"

namespace ssoprobe::openid {

OpenIdMessage make_positive_assertion(const PositiveAssertion& f) {
  OpenIdMessage token = OpenIdMessage::with_mode("id_res");
  token.set_field("op_endpoint", f.op_endpoint);
  token.set_field("claimed_id", f.claimed_id);
  token.set_field("identity", f.identity);
  token.set_field("return_to", f.return_to);
  token.set_field("response_nonce", f.response_nonce);
  token.set_field("assoc_handle", f.assoc_handle);
  token.set_field("signed", "op_endpoint,claimed_id,identity,return_to,response_nonce,assoc_handle");
  return token;
}

std::vector<std::string> signed_fields(const OpenIdMessage& token) {
  std::vector<std::string> fields;
  const auto list = token.field("signed");
  if (!list || list->empty()) return fields;
  std::string_view rest = *list;
  while (true) {
    const auto comma = rest.find(',');
    fields.emplace_back(rest.substr(0, comma));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return fields;
}

std::string join_signed(const std::vector<std::string>& fields) {
  std::string out;
  for (const auto& f : fields) {
    if (!out.empty()) out.push_back(',');
    out += f;
  }
  return out;
}

std::string signature_base_string(const OpenIdMessage& token) {
  OpenIdMessage base;
  for (const auto& name : signed_fields(token)) {
    auto value = token.field(name);
    if (!value) throw MissingSignedField(name);
    base.add(openid_key(name), std::move(*value));
  }
  return encode_key_value(base);
}

std::string sign_token(const OpenIdMessage& token, const Association& association) {
  const std::string base = signature_base_string(token);
  return base64_encode(hmac(mac_hash(association.assoc_type), association.mac_key, as_bytes(base)));
}

void apply_signature(OpenIdMessage& token, const Association& association) {
  token.set_field("sig", sign_token(token, association));
}

bool verify_signature(const OpenIdMessage& token, const Association& association) {
  const auto sig = token.field("sig");
  if (!sig) return false;
  try {
    return constant_time_equal(sign_token(token, association), *sig);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace ssoprobe::openid
