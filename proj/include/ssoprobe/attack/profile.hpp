#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ssoprobe/idp/mutation.hpp"

namespace ssoprobe::attack {

enum class AttackClass { trc, kc1, kc2, ids, ds, unsigned_params, replay, xxe };
enum class Choreography { single_flow, interleaved_double_login, collect_and_replay };

/// "TRC", "KC1", ... "UNSIGNED", "REPLAY", "XXE".
std::string_view to_string(AttackClass c);
std::optional<AttackClass> parse_attack_class(std::string_view text);
std::string_view to_string(Choreography c);
std::optional<Choreography> parse_choreography(std::string_view text);

/// All classes in run_all order.
const std::vector<AttackClass>& attack_classes();
/// "single-account", "all-accounts" or "finding".
std::string_view severity(AttackClass c);

inline constexpr int kProfileSchemaVersion = 1;

/// Stored attack configuration. Mutation values and victim_identity may use
/// ${victim_id}, ${victim_op}, ${collector_url}, ${canary_url}, ${alpha} and
/// ${forged_nonce}; the engine expands them at run time.
struct AttackProfile {
  int schema_version = kProfileSchemaVersion;
  std::string name;
  AttackClass attack_class = AttackClass::trc;
  Choreography choreography = Choreography::single_flow;
  std::string victim_identity = "${victim_id}";
  idp::MutationList mutations;

  friend bool operator==(const AttackProfile&, const AttackProfile&) = default;
};

nlohmann::ordered_json to_json(const AttackProfile& profile);
/// Throws std::invalid_argument on unknown keys, classes or schema versions.
AttackProfile profile_from_json(const nlohmann::ordered_json& j);
/// Canonical file form: two-space indented JSON plus a trailing newline.
std::string serialize(const AttackProfile& profile);
AttackProfile parse_profile(std::string_view text);

/// One profile per attack class, in run_all order.
const std::vector<AttackProfile>& builtin_profiles();
std::optional<AttackProfile> find_builtin(std::string_view name);

/// Reads every *.json file in `dir`, ordered by attack class then name.
std::vector<AttackProfile> load_profile_dir(const std::string& dir);
void write_profile_dir(const std::string& dir, const std::vector<AttackProfile>& profiles);

using TemplateVars = std::map<std::string, std::string>;
/// Replaces ${name}; unknown names are left as they are.
std::string expand(std::string_view text, const TemplateVars& vars);
idp::MutationList expand(const idp::MutationList& mutations, const TemplateVars& vars);

}  // namespace ssoprobe::attack
