#include "ssoprobe/attack/result.hpp"

#include <iomanip>
#include <sstream>

namespace ssoprobe::attack {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::vulnerable: return "VULNERABLE";
    case Outcome::safe: return "SAFE";
    case Outcome::inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (auto o : {Outcome::vulnerable, Outcome::safe, Outcome::inconclusive})
    if (to_string(o) == text) return o;
  return std::nullopt;
}

nlohmann::ordered_json to_json(const AttackResult& r) {
  nlohmann::ordered_json j;
  j["profile"] = r.profile;
  j["attack_class"] = std::string(to_string(r.attack_class));
  j["verdict"] = std::string(to_string(r.verdict));
  j["severity"] = std::string(severity(r.attack_class));
  auto trace = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.evidence.trace.size(); ++i) {
    const auto& s = r.evidence.trace[i];
    nlohmann::ordered_json step{{"step", i + 1}, {"label", s.label}};
    if (!s.detail.empty()) step["detail"] = s.detail;
    trace.push_back(std::move(step));
  }
  j["trace"] = std::move(trace);
  j["observations"] = r.evidence.observations;
  j["sp_verdict"] = r.evidence.sp_verdict;
  return j;
}

nlohmann::ordered_json to_json(const NormalFlow& f) {
  nlohmann::ordered_json j;
  j["openid_version"] = f.openid_version;
  j["login_url"] = f.login_url;
  j["callback_url"] = f.callback_url;
  j["assoc_type"] = f.assoc_type ? nlohmann::ordered_json(*f.assoc_type) : nullptr;
  j["direct_verification"] = f.direct_verification;
  j["rediscovery"] = f.rediscovery;
  auto messages = nlohmann::ordered_json::array();
  for (const auto& m : f.messages)
    messages.push_back({{"phase", m.phase}, {"direction", m.direction}, {"params", m.params}});
  j["messages"] = std::move(messages);
  return j;
}

std::map<AttackClass, ClassTotals> SecurityReport::totals() const {
  std::map<AttackClass, ClassTotals> out;
  for (const auto& r : results) {
    auto& t = out[r.attack_class];
    switch (r.verdict) {
      case Outcome::vulnerable: ++t.vulnerable; break;
      case Outcome::safe: ++t.safe; break;
      case Outcome::inconclusive: ++t.inconclusive; break;
    }
  }
  return out;
}

int SecurityReport::vulnerable_count() const {
  int n = 0;
  for (const auto& r : results) n += r.verdict == Outcome::vulnerable;
  return n;
}

nlohmann::ordered_json report_body(const SecurityReport& report) {
  nlohmann::ordered_json body;
  body["target"] = report.target;
  body["normal_flow"] = report.normal_flow ? to_json(*report.normal_flow) : nullptr;
  if (report.error) body["error"] = *report.error;
  auto results = nlohmann::ordered_json::array();
  for (const auto& r : report.results) results.push_back(to_json(r));
  body["results"] = std::move(results);
  auto totals = nlohmann::ordered_json::object();
  for (const auto& [cls, t] : report.totals())
    totals[std::string(to_string(cls))] = {
        {"VULNERABLE", t.vulnerable}, {"SAFE", t.safe}, {"INCONCLUSIVE", t.inconclusive}};
  body["totals"] = std::move(totals);
  body["vulnerable"] = report.vulnerable_count();
  return body;
}

nlohmann::ordered_json to_json(const SecurityReport& report) {
  nlohmann::ordered_json header;
  header["generated_at"] = report.generated_at;
  header["tool_version"] = report.tool_version;
  header["total_duration_ms"] = report.total_duration.count();
  auto durations = nlohmann::ordered_json::object();
  for (const auto& r : report.results) durations[r.profile] = r.duration.count();
  header["durations_ms"] = std::move(durations);
  return {{"header", std::move(header)}, {"body", report_body(report)}};
}

std::string render_text(const SecurityReport& report) {
  std::ostringstream out;
  out << "generated " << report.generated_at << " in " << report.total_duration.count()
      << " ms (ssoprobe " << report.tool_version << ")\n\n";
  out << "Target: " << report.target << "\n";
  if (report.normal_flow) {
    const auto& f = *report.normal_flow;
    out << "Normal flow: OpenID " << f.openid_version << ", "
        << (f.direct_verification ? "direct verification" : "association " + f.assoc_type.value_or("none"))
        << ", rediscovery " << (f.rediscovery ? "yes" : "no") << ", " << f.messages.size()
        << " messages\n";
  }
  if (report.error) out << "Aborted: " << *report.error << "\n";
  out << "\n";
  out << std::left << std::setw(12) << "Attack" << std::setw(14) << "Verdict" << std::setw(16)
      << "Severity" << "Outcome\n";
  out << std::string(72, '-') << "\n";
  for (const auto& r : report.results) {
    std::string outcome;
    if (!r.evidence.trace.empty()) {
      const auto& last = r.evidence.trace.back();
      outcome = last.detail.empty() ? last.label : last.label + ": " + last.detail;
    } else if (!r.evidence.observations.empty()) {
      outcome = r.evidence.observations.back();
    }
    out << std::setw(12) << to_string(r.attack_class) << std::setw(14) << to_string(r.verdict)
        << std::setw(16) << (r.verdict == Outcome::vulnerable ? severity(r.attack_class) : "-")
        << outcome << "\n";
  }
  out << std::string(72, '-') << "\n";
  const auto totals = report.totals();
  int safe = 0, inconclusive = 0;
  for (const auto& [_, t] : totals) {
    safe += t.safe;
    inconclusive += t.inconclusive;
  }
  out << "Total: " << report.vulnerable_count() << " VULNERABLE, " << safe << " SAFE, "
      << inconclusive << " INCONCLUSIVE\n";
  return out.str();
}

}  // namespace ssoprobe::attack
