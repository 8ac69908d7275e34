#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssoprobe/attack/profile.hpp"

namespace ssoprobe::attack {

enum class Outcome { vulnerable, safe, inconclusive };
/// "VULNERABLE", "SAFE", "INCONCLUSIVE".
std::string_view to_string(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view text);

struct TraceStep {
  std::string label;
  std::string detail;

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

/// What happened during a run. Raw handles, nonces and session ids never
/// appear here; URLs are replaced by role labels (URL.ID_V, URL.SP, ...).
struct Evidence {
  std::vector<TraceStep> trace;
  std::vector<std::string> observations;
  nlohmann::ordered_json sp_verdict;  // decisive relying-party verdict, null if none
};

struct AttackResult {
  std::string profile;
  AttackClass attack_class = AttackClass::trc;
  Outcome verdict = Outcome::inconclusive;
  Evidence evidence;
  std::chrono::milliseconds duration{0};
};

/// Without duration: the stable part of a result.
nlohmann::ordered_json to_json(const AttackResult& result);

struct FlowMessage {
  std::string phase;      // discovery, association, token, check_auth
  std::string direction;  // inbound/outbound as seen by the IdP
  std::vector<std::string> params;
};

/// Shape of one honest login against the target.
struct NormalFlow {
  std::string openid_version = "2.0";
  std::vector<FlowMessage> messages;
  std::string login_url;
  std::string callback_url;
  std::optional<std::string> assoc_type;  // absent when the target never associated
  bool direct_verification = false;
  bool rediscovery = false;
};

nlohmann::ordered_json to_json(const NormalFlow& flow);

struct ClassTotals {
  int vulnerable = 0;
  int safe = 0;
  int inconclusive = 0;
};

struct SecurityReport {
  // header: varies between runs
  std::string generated_at;
  std::string tool_version;
  std::chrono::milliseconds total_duration{0};
  // body
  std::string target;
  std::optional<NormalFlow> normal_flow;
  std::optional<std::string> error;  // set when the run aborted
  std::vector<AttackResult> results;

  std::map<AttackClass, ClassTotals> totals() const;
  int vulnerable_count() const;
};

/// {"header": {...}, "body": {...}}; the body is byte-stable for identical verdicts.
nlohmann::ordered_json to_json(const SecurityReport& report);
nlohmann::ordered_json report_body(const SecurityReport& report);
/// Plain-text table, attack x verdict, with the header on the first lines.
std::string render_text(const SecurityReport& report);

}  // namespace ssoprobe::attack
