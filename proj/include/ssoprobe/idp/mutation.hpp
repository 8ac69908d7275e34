#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ssoprobe::idp {

enum class MutationKind {
  set_field,
  drop_field,
  drop_from_signed,
  force_handle,
  force_return_to,
  force_identity,
  spoof_discovery_local_id,
  replay_token,
  xxe_payload,
};

std::string_view to_string(MutationKind kind);
std::optional<MutationKind> parse_mutation_kind(std::string_view text);

enum class MutationStage { pre_sign, post_sign };

/// One edit to IdP behavior. Token edits compose left to right.
///
/// field/value meaning per kind:
///   set_field                 field := value
///   drop_field                remove field (and its signed-list entry)
///   drop_from_signed          remove field from openid.signed only
///   force_handle              associate answers with handle `value`
///   force_return_to           token return_to and redirect target := value
///   force_identity            claimed_id and identity := value
///   spoof_discovery_local_id  discovery names `value` as local id;
///                             field "second" spoofs from the second fetch on
///   replay_token              answer checkid with the captured token in `value`
///   xxe_payload               discovery serves XRDS with an external entity
///                             pointing at `value`; non-empty field replaces the
///                             whole document
struct TokenMutation {
  MutationKind kind = MutationKind::set_field;
  std::string field;
  std::string value;
  MutationStage stage = MutationStage::pre_sign;

  friend bool operator==(const TokenMutation&, const TokenMutation&) = default;
};

using MutationList = std::vector<TokenMutation>;

nlohmann::ordered_json to_json(const TokenMutation& mutation);
TokenMutation mutation_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const MutationList& mutations);
/// Accepts a bare array or {"mutations": [...]}. Throws std::invalid_argument.
MutationList mutations_from_json(const nlohmann::ordered_json& j);

}  // namespace ssoprobe::idp
