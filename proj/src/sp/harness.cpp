#include "ssoprobe/sp/harness.hpp"

#include <algorithm>

#include "ssoprobe/discovery/discovery.hpp"
#include "ssoprobe/openid/crypto.hpp"
#include "ssoprobe/openid/dh.hpp"
#include "ssoprobe/openid/nonce.hpp"
#include "ssoprobe/openid/token.hpp"
#include "ssoprobe/openid/url.hpp"

namespace ssoprobe::sp {
namespace {

using openid::OpenIdMessage;

constexpr std::int64_t kFutureSkew = 300;
constexpr std::string_view kSessionCookie = "sp_session";

// Accumulates check records; fail() also sets the verdict's reason.
class Evidence {
 public:
  explicit Evidence(Verdict& v) : v_(v) {}

  void pass(std::string check, std::string detail = {}) {
    v_.evidence.push_back({std::move(check), CheckStatus::passed, std::move(detail)});
  }
  void skip(std::string check, std::string detail = {}) {
    v_.evidence.push_back({std::move(check), CheckStatus::skipped, std::move(detail)});
  }
  void fail(std::string check, std::string reason, std::string detail = {}) {
    v_.evidence.push_back({std::move(check), CheckStatus::failed, std::move(detail)});
    v_.outcome = Verdict::Outcome::rejected;
    v_.reason = std::move(reason);
  }

 private:
  Verdict& v_;
};

std::optional<std::string> query_param(std::string_view url, std::string_view name) {
  const auto parsed = openid::parse_url(url);
  if (!parsed) return std::nullopt;
  for (const auto& [k, v] : openid::parse_query(parsed->query))
    if (k == name) return v;
  return std::nullopt;
}

bool listed(const std::vector<std::string>& fields, std::string_view name) {
  return std::find(fields.begin(), fields.end(), name) != fields.end();
}

// return_to must name this endpoint and every one of its query parameters
// must be present, with the same value, on the URL the assertion arrived at.
bool return_to_matches(std::string_view return_to, std::string_view arrived_at) {
  const auto rt = openid::parse_url(return_to);
  const auto actual = openid::parse_url(arrived_at);
  if (!rt || !actual) return false;
  if (rt->without_query() != actual->without_query()) return false;
  const auto actual_params = openid::parse_query(actual->query);
  for (const auto& p : openid::parse_query(rt->query))
    if (std::find(actual_params.begin(), actual_params.end(), p) == actual_params.end())
      return false;
  return true;
}

std::string session_cookie(const std::string& id) {
  return std::string(kSessionCookie) + "=" + id + "; Path=/; HttpOnly";
}

}  // namespace

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::passed: return "passed";
    case CheckStatus::failed: return "failed";
    case CheckStatus::skipped: return "skipped";
  }
  return "passed";
}

nlohmann::ordered_json to_json(const Verdict& v) {
  nlohmann::ordered_json j;
  j["outcome"] = v.logged_in() ? "LOGGED_IN" : "REJECTED";
  if (v.logged_in())
    j["account"] = v.account;
  else
    j["reason"] = v.reason;
  auto evidence = nlohmann::ordered_json::array();
  for (const auto& e : v.evidence) {
    nlohmann::ordered_json item{{"check", e.check}, {"status", std::string(to_string(e.status))}};
    if (!e.detail.empty()) item["detail"] = e.detail;
    evidence.push_back(std::move(item));
  }
  j["evidence"] = std::move(evidence);
  return j;
}

SpHarness::SpHarness(SpConfig config, net::HttpTransport& transport)
    : config_(std::move(config)), transport_(transport) {
  if (!openid::is_absolute_http_url(config_.base_url))
    throw std::invalid_argument("SP base_url must be an absolute URL: " + config_.base_url);
  while (config_.base_url.ends_with('/')) config_.base_url.pop_back();
}

VerificationPolicy SpHarness::policy() const {
  std::lock_guard lock(mutex_);
  return config_.policy;
}

void SpHarness::set_policy(VerificationPolicy policy) {
  std::lock_guard lock(mutex_);
  config_.policy = std::move(policy);
}

std::vector<Verdict> SpHarness::verdicts() const {
  std::lock_guard lock(mutex_);
  return verdicts_;
}

void SpHarness::reset() {
  {
    std::lock_guard lock(mutex_);
    sessions_.clear();
    seen_nonces_.clear();
    verdicts_.clear();
  }
  associations_.clear();
}

std::string SpHarness::new_session() {
  std::lock_guard lock(mutex_);
  std::string id = openid::random_token(24);
  sessions_[id].id = id;
  return id;
}

std::optional<SpSession> SpHarness::session(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> SpHarness::protected_resource(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second.account;
}

std::optional<openid::Association> SpHarness::associate(const std::string& op_endpoint,
                                                        const VerificationPolicy& policy) {
  auto request = OpenIdMessage::with_mode("associate");
  request.set_field("assoc_type", std::string(openid::to_string(policy.assoc_type)));
  request.set_field("session_type", std::string(openid::to_string(policy.session_type)));
  const auto dh_hash = openid::session_hash(policy.session_type);
  std::optional<openid::DhKeyPair> keys;
  if (dh_hash) {
    keys = openid::DhKeyPair::generate(openid::default_dh_parameters());
    request.set_field("dh_consumer_public", openid::base64_encode(keys->public_key().to_btwoc()));
  }
  try {
    const auto response = transport_.send(net::post_form(op_endpoint, request.params()));
    if (response.status != 200) return std::nullopt;
    const auto reply = openid::decode_key_value(response.body);
    if (reply.field("assoc_type") != openid::to_string(policy.assoc_type)) return std::nullopt;

    openid::Association a;
    a.handle = reply.field("assoc_handle").value_or("");
    if (!openid::valid_handle(a.handle)) return std::nullopt;
    a.assoc_type = policy.assoc_type;
    a.session_type = policy.session_type;
    a.expires_in = std::stoll(reply.field("expires_in").value_or("0"));
    a.issued_at = now();
    a.op_endpoint = op_endpoint;
    if (dh_hash) {
      const auto server = openid::base64_decode(reply.field("dh_server_public").value_or("?"));
      const auto enc = openid::base64_decode(reply.field("enc_mac_key").value_or("?"));
      if (!server || !enc) return std::nullopt;
      const auto secret = openid::dh_derive(*keys, openid::BigUint::from_btwoc(*server), *dh_hash);
      if (secret.size() != enc->size()) return std::nullopt;
      a.mac_key = openid::wrap_mac_key(*enc, secret);
    } else {
      const auto key = openid::base64_decode(reply.field("mac_key").value_or("?"));
      if (!key) return std::nullopt;
      a.mac_key = *key;
    }
    if (a.mac_key.size() != openid::mac_key_size(a.assoc_type) || a.expires_in <= 0)
      return std::nullopt;
    associations_.store(a);
    return a;
  } catch (const std::exception&) {
    // Any association failure degrades to stateless mode.
    return std::nullopt;
  }
}

bool SpHarness::direct_verify(const OpenIdMessage& token) {
  const auto endpoint = token.field("op_endpoint");
  if (!endpoint || !openid::is_absolute_http_url(*endpoint)) return false;
  auto request = token;
  request.set_field("mode", "check_authentication");
  try {
    const auto response = transport_.send(net::post_form(*endpoint, request.params()));
    if (response.status != 200) return false;
    const auto reply = openid::decode_key_value(response.body);
    if (const auto inv = reply.field("invalidate_handle")) associations_.remove(*endpoint, *inv);
    return reply.field("is_valid") == "true";
  } catch (const std::exception&) {
    return false;
  }
}

LoginStart SpHarness::begin_login(const std::string& session_id, const std::string& input) {
  const auto policy = this->policy();
  LoginStart start;
  std::string claimed = input;
  if (claimed.find("://") == std::string::npos) claimed = "http://" + claimed;

  discovery::DiscoverOptions options;
  options.now = now();
  options.xml.xxe = policy.xxe;
  if (policy.xxe == discovery::XxeMode::resolve_unsafe)
    options.xml.resolver = discovery::transport_resolver(transport_);

  discovery::DiscoveryResult found;
  try {
    found = discovery::discover(claimed, transport_, options);
  } catch (const std::exception& e) {
    Verdict v;
    v.session_id = session_id;
    v.reason = "discovery_failed";
    v.evidence.push_back({"discovery", CheckStatus::failed, e.what()});
    std::lock_guard lock(mutex_);
    verdicts_.push_back(v);
    start.rejected = std::move(v);
    return start;
  }

  const std::string rid = openid::random_token(16);
  const SessionPair pair{found.claimed_id, found.op_endpoint, found.op_local_id};
  {
    std::lock_guard lock(mutex_);
    auto& s = sessions_[session_id];
    s.id = session_id;
    switch (policy.session_binding) {
      case SessionBinding::none: break;
      case SessionBinding::overwritable: s.pair = pair; break;
      case SessionBinding::immutable:
        if (!s.pair) s.pair = pair;
        s.requests[rid] = pair;
        break;
    }
  }

  std::optional<openid::Association> assoc;
  if (!policy.use_direct_verification) {
    assoc = associations_.find_usable(found.op_endpoint, now());
    if (!assoc) assoc = associate(found.op_endpoint, policy);
  }

  auto request = OpenIdMessage::with_mode("checkid_setup");
  request.set_field("claimed_id", found.claimed_id);
  request.set_field("identity", found.op_local_id.value_or(found.claimed_id));
  request.set_field("return_to", callback_url() + "?rid=" + rid);
  request.set_field("realm", config_.base_url + "/");
  if (assoc) {
    request.set_field("assoc_handle", assoc->handle);
    start.assoc_handle = assoc->handle;
  }
  start.redirect = openid::encode_indirect(request, found.op_endpoint);
  return start;
}

Verdict SpHarness::process_assertion(const std::string& session_id, const OpenIdMessage& raw,
                                     const std::string& arrived_at) {
  const auto policy = this->policy();
  Verdict verdict;
  verdict.session_id = session_id;
  Evidence ev(verdict);

  std::optional<SessionPair> reference;
  {
    std::lock_guard lock(mutex_);
    auto& s = sessions_[session_id];
    s.id = session_id;
    reference = s.pair;
    if (policy.session_binding == SessionBinding::immutable) {
      const auto rid = query_param(raw.field("return_to").value_or(""), "rid");
      if (rid && s.requests.count(*rid)) reference = s.requests.at(*rid);
    }
    if (policy.session_binding == SessionBinding::none) reference.reset();
  }

  auto run = [&]() {
    // parse
    OpenIdMessage token = raw.openid_only();
    const auto mode = token.field("mode").value_or("");
    if (mode != "id_res") return ev.fail("parse", "negative_assertion", "mode=" + mode);
    if (token.has_duplicates()) {
      if (policy.reject_duplicate_params) return ev.fail("parse", "duplicate_params");
      token = token.canonicalized(policy.duplicate_resolution);
    }
    for (const char* f : {"op_endpoint", "return_to", "response_nonce", "assoc_handle", "claimed_id",
                          "identity", "signed", "sig"}) {
      if (!token.has_field(f)) return ev.fail("parse", "missing_field", f);
    }
    const std::string op_endpoint = *token.field("op_endpoint");
    const std::string claimed_id = *token.field("claimed_id");
    const std::string nonce = *token.field("response_nonce");
    const std::string return_to = *token.field("return_to");
    const std::string handle = *token.field("assoc_handle");
    if (!openid::is_absolute_http_url(op_endpoint) || !openid::is_absolute_http_url(claimed_id))
      return ev.fail("parse", "missing_field", "op_endpoint or claimed_id is not a URL");
    ev.pass("parse");

    // freshness
    if (!policy.check_nonce) {
      ev.skip("freshness");
    } else {
      const auto ts = openid::nonce_timestamp(nonce);
      if (!ts) return ev.fail("freshness", "nonce_malformed");
      const auto t = now();
      if (t - *ts > policy.nonce_window)
        return ev.fail("freshness", "nonce_stale", "age " + std::to_string(t - *ts) + "s");
      if (*ts - t > kFutureSkew) return ev.fail("freshness", "nonce_stale", "issued in the future");
      std::lock_guard lock(mutex_);
      std::erase_if(seen_nonces_,
                    [&](const auto& e) { return t - e.second > policy.nonce_window; });
      if (!seen_nonces_.emplace(op_endpoint + " " + nonce, *ts).second)
        return ev.fail("freshness", "nonce_reused");
      ev.pass("freshness");
    }

    // recipient
    if (!policy.check_return_to) {
      ev.skip("recipient");
    } else {
      const std::string& actual = arrived_at.empty() ? callback_url() : arrived_at;
      if (!return_to_matches(return_to, actual) ||
          openid::parse_url(return_to)->without_query() != callback_url())
        return ev.fail("recipient", "return_to_mismatch",
                       openid::parse_url(return_to) ? openid::parse_url(return_to)->without_query()
                                                    : return_to);
      ev.pass("recipient");
    }

    // signature
    const auto signed_list = openid::signed_fields(token);
    if (policy.require_signed_set) {
      for (auto f : openid::kRequiredSignedFields)
        if (!listed(signed_list, f))
          return ev.fail("signature", "unsigned_required_field", std::string(f));
    }
    if (policy.use_direct_verification) {
      if (!direct_verify(token)) return ev.fail("signature", "bad_signature", "check_authentication");
      ev.pass("signature", "check_authentication");
    } else {
      std::optional<openid::Association> assoc;
      if (policy.key_lookup == KeyLookup::by_handle) {
        assoc = associations_.find(handle);
      } else {
        assoc = associations_.find(op_endpoint, handle);
        if (!assoc && associations_.find(handle))
          return ev.fail("signature", "key_mismatch", "handle belongs to another endpoint");
      }
      if (assoc && assoc->expired(now())) {
        associations_.remove(assoc->op_endpoint, assoc->handle);
        assoc.reset();
      }
      if (assoc) {
        if (!openid::verify_signature(token, *assoc)) return ev.fail("signature", "bad_signature");
        ev.pass("signature", "association");
      } else {
        if (!direct_verify(token))
          return ev.fail("signature", "bad_signature", "check_authentication");
        ev.pass("signature", "check_authentication");
      }
    }

    // idp_authority
    std::optional<std::string> local_id;
    auto rediscover = [&]() -> std::optional<discovery::DiscoveryResult> {
      discovery::DiscoverOptions options;
      options.now = now();
      options.xml.xxe = policy.xxe;
      try {
        return discovery::discover(claimed_id, transport_, options);
      } catch (const std::exception& e) {
        ev.fail("idp_authority", "discovery_failed", e.what());
        return std::nullopt;
      }
    };
    if (!policy.require_signed_set && !listed(signed_list, "claimed_id")) {
      ev.skip("idp_authority", "claimed_id not signed");
    } else if (policy.rediscover_always) {
      const auto found = rediscover();
      if (!found) return;
      if (found->op_endpoint != op_endpoint)
        return ev.fail("idp_authority", "idp_mismatch", found->op_endpoint);
      local_id = found->op_local_id;
      ev.pass("idp_authority", "rediscovered");
    } else if (policy.rediscover_on_mismatch) {
      if (reference && reference->claimed_id == claimed_id && reference->op_endpoint == op_endpoint) {
        local_id = reference->local_id;
        ev.pass("idp_authority", "session pair");
      } else {
        const auto found = rediscover();
        if (!found) return;
        const std::string& expected = reference ? reference->op_endpoint : op_endpoint;
        if (found->op_endpoint != expected)
          return ev.fail("idp_authority", "idp_mismatch", found->op_endpoint);
        local_id = found->op_local_id;
        ev.pass("idp_authority", "rediscovered");
      }
    } else {
      if (reference && reference->claimed_id == claimed_id) local_id = reference->local_id;
      ev.skip("idp_authority");
    }

    // account_mapping
    if (policy.trust_discovered_local_id && local_id) {
      verdict.account = openid::normalize_identifier(*local_id);
      ev.pass("account_mapping", "discovered local id");
    } else {
      verdict.account = openid::normalize_identifier(claimed_id);
      ev.pass("account_mapping");
    }
    verdict.outcome = Verdict::Outcome::logged_in;
  };
  run();

  std::lock_guard lock(mutex_);
  auto& s = sessions_[session_id];
  if (verdict.logged_in()) s.account = verdict.account;
  s.last_verdict = verdict;
  verdicts_.push_back(verdict);
  return verdict;
}

net::HttpResponse SpHarness::handle(const net::HttpRequest& request) {
  const std::string path = request.path();
  auto existing = request.cookie(kSessionCookie);
  auto with_session = [&](net::HttpResponse response, const std::string& id) {
    if (!existing || *existing != id) response.headers.add("Set-Cookie", session_cookie(id));
    return response;
  };
  auto session_id = [&]() {
    if (existing && session(*existing)) return *existing;
    return new_session();
  };

  try {
    if (path == "/login" && request.method == "POST") {
      const auto input = request.param("openid_identifier");
      if (!input || input->empty()) return net::HttpResponse::text(400, "missing openid_identifier");
      const auto id = session_id();
      const auto start = begin_login(id, *input);
      if (start.rejected)
        return with_session(net::HttpResponse::json(403, to_json(*start.rejected).dump()), id);
      return with_session(net::HttpResponse::redirect(*start.redirect), id);
    }
    if (path == "/callback") {
      const auto id = session_id();
      std::string arrived_at = request.url;
      auto message = openid::decode_indirect(openid::parse_url(request.url)->query);
      if (request.method == "POST") {
        for (auto& [k, v] : openid::decode_indirect(request.body).params()) message.add(k, v);
      }
      const auto v = process_assertion(id, message, arrived_at);
      return with_session(net::HttpResponse::json(v.logged_in() ? 200 : 403, to_json(v).dump()), id);
    }
    if (path == "/resource" && request.method == "GET") {
      const auto account = existing ? protected_resource(*existing) : std::nullopt;
      if (!account) return net::HttpResponse::json(401, R"({"error":"not logged in"})");
      return net::HttpResponse::json(200, nlohmann::ordered_json{{"account", *account}}.dump());
    }

    if (config_.control_api && path.starts_with("/control/")) {
      if (path == "/control/policy" && (request.method == "PUT" || request.method == "POST")) {
        const auto j = nlohmann::ordered_json::parse(request.body);
        VerificationPolicy next;
        if (j.is_string()) {
          next = load_preset(j.get<std::string>());
        } else if (j.is_object() && j.contains("preset")) {
          auto rest = j;
          rest.erase("preset");
          next = policy_from_json(rest, load_preset(j.at("preset").get<std::string>()));
        } else {
          next = policy_from_json(j, hardened_policy());
        }
        set_policy(next);
        return net::HttpResponse::json(200, to_json(next).dump());
      }
      if (path == "/control/policy" && request.method == "GET")
        return net::HttpResponse::json(200, to_json(policy()).dump());
      if (path == "/control/verdicts" && request.method == "GET") {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& v : verdicts()) arr.push_back(to_json(v));
        return net::HttpResponse::json(200, arr.dump());
      }
      if (path == "/control/reset" && request.method == "POST") {
        reset();
        return net::HttpResponse::json(200, R"({"reset":true})");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    return net::HttpResponse::json(400, nlohmann::ordered_json{{"error", e.what()}}.dump());
  } catch (const std::invalid_argument& e) {
    return net::HttpResponse::text(400, e.what());
  } catch (const openid::CodecError& e) {
    return net::HttpResponse::text(400, e.what());
  }
  return net::HttpResponse::text(404, "not found");
}

}  // namespace ssoprobe::sp
