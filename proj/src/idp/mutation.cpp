#include "ssoprobe/idp/mutation.hpp"

#include <stdexcept>

namespace ssoprobe::idp {
namespace {

constexpr std::pair<MutationKind, std::string_view> kKindNames[] = {
    {MutationKind::set_field, "SET_FIELD"},
    {MutationKind::drop_field, "DROP_FIELD"},
    {MutationKind::drop_from_signed, "DROP_FROM_SIGNED"},
    {MutationKind::force_handle, "FORCE_HANDLE"},
    {MutationKind::force_return_to, "FORCE_RETURN_TO"},
    {MutationKind::force_identity, "FORCE_IDENTITY"},
    {MutationKind::spoof_discovery_local_id, "SPOOF_DISCOVERY_LOCAL_ID"},
    {MutationKind::replay_token, "REPLAY_TOKEN"},
    {MutationKind::xxe_payload, "XXE_PAYLOAD"},
};

}  // namespace

std::string_view to_string(MutationKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "SET_FIELD";
}

std::optional<MutationKind> parse_mutation_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames)
    if (name == text) return k;
  return std::nullopt;
}

nlohmann::ordered_json to_json(const TokenMutation& m) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(m.kind));
  if (!m.field.empty()) j["field"] = m.field;
  if (!m.value.empty()) j["value"] = m.value;
  if (m.stage == MutationStage::post_sign) j["stage"] = "post_sign";
  return j;
}

TokenMutation mutation_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw std::invalid_argument("mutation must be an object");
  TokenMutation m;
  const auto kind = j.contains("kind") && j["kind"].is_string()
                        ? parse_mutation_kind(j["kind"].get<std::string>())
                        : std::nullopt;
  if (!kind) throw std::invalid_argument("mutation has no valid kind");
  m.kind = *kind;
  auto text = [&](const char* key) -> std::string {
    if (!j.contains(key)) return {};
    if (!j[key].is_string()) throw std::invalid_argument(std::string(key) + " must be a string");
    return j[key].get<std::string>();
  };
  m.field = text("field");
  m.value = text("value");
  const auto stage = text("stage");
  if (stage == "post_sign")
    m.stage = MutationStage::post_sign;
  else if (!stage.empty() && stage != "pre_sign")
    throw std::invalid_argument("unknown stage: " + stage);
  return m;
}

nlohmann::ordered_json to_json(const MutationList& mutations) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& m : mutations) arr.push_back(to_json(m));
  return arr;
}

MutationList mutations_from_json(const nlohmann::ordered_json& j) {
  const auto& arr = j.is_object() && j.contains("mutations") ? j["mutations"] : j;
  if (!arr.is_array()) throw std::invalid_argument("mutations must be an array");
  MutationList out;
  for (const auto& item : arr) out.push_back(mutation_from_json(item));
  return out;
}

}  // namespace ssoprobe::idp
