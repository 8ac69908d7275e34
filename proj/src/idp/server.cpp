#include "ssoprobe/idp/server.hpp"

#include "ssoprobe/discovery/discovery.hpp"
#include "ssoprobe/openid/crypto.hpp"
#include "ssoprobe/openid/dh.hpp"
#include "ssoprobe/openid/token.hpp"

namespace ssoprobe::idp {
namespace {

using openid::OpenIdMessage;

OpenIdMessage error_message(std::string text, std::string code = {}) {
  OpenIdMessage m{{"openid.ns", std::string(openid::kOpenId2Namespace)}};
  m.set_field("error", std::move(text));
  if (!code.empty()) m.set_field("error_code", std::move(code));
  return m;
}

OpenIdMessage unsupported_type(std::string text) {
  auto m = error_message(std::move(text), "unsupported-type");
  m.set_field("session_type", "DH-SHA256");
  m.set_field("assoc_type", "HMAC-SHA256");
  return m;
}

void remove_from_signed(OpenIdMessage& token, const std::string& field) {
  auto fields = openid::signed_fields(token);
  std::erase(fields, field);
  token.set_field("signed", openid::join_signed(fields));
}

nlohmann::ordered_json message_json(const OpenIdMessage& m) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [k, v] : m.params()) arr.push_back({k, v});
  return arr;
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::inbound ? "inbound" : "outbound"; }

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::discovery: return "discovery";
    case Phase::association: return "association";
    case Phase::token: return "token";
    case Phase::check_auth: return "check_auth";
  }
  return "discovery";
}

nlohmann::ordered_json to_json(const MessageLogEntry& e) {
  nlohmann::ordered_json j;
  j["seq"] = e.seq;
  j["direction"] = std::string(to_string(e.direction));
  j["phase"] = std::string(to_string(e.phase));
  j["endpoint"] = e.endpoint;
  j["message"] = message_json(e.message);
  if (!e.document.empty()) j["document"] = e.document;
  j["timestamp"] = e.timestamp;
  return j;
}

OpenIdMessage request_message(const net::HttpRequest& request) {
  OpenIdMessage m;
  for (auto& [k, v] : request.params())
    if (k.starts_with(openid::kPrefix)) m.add(std::move(k), std::move(v));
  return m;
}

net::HttpResponse direct_response(const OpenIdMessage& message) {
  return net::HttpResponse::text(message.has_field("error") ? 400 : 200,
                                 openid::encode_key_value(message));
}

IdpServer::IdpServer(IdpConfig config)
    : config_(std::move(config)),
      mutations_(std::make_shared<const MutationList>(config_.mutations)) {
  if (!openid::is_absolute_http_url(config_.base_url))
    throw std::invalid_argument("IdP base_url must be an absolute URL: " + config_.base_url);
  while (config_.base_url.ends_with('/')) config_.base_url.pop_back();
}

void IdpServer::log(Direction d, Phase p, const std::string& endpoint, OpenIdMessage message,
                    std::string document) {
  std::lock_guard lock(mutex_);
  log_.push_back({next_seq_++, d, p, endpoint, std::move(message), std::move(document), now()});
}

std::vector<MessageLogEntry> IdpServer::drain_log() {
  std::lock_guard lock(mutex_);
  return std::exchange(log_, {});
}

std::vector<MessageLogEntry> IdpServer::peek_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

void IdpServer::set_mutations(MutationList mutations) {
  auto next = std::make_shared<const MutationList>(std::move(mutations));
  std::lock_guard lock(mutex_);
  mutations_ = std::move(next);
  discovery_counts_.clear();
}

std::shared_ptr<const MutationList> IdpServer::current_mutations() const {
  std::lock_guard lock(mutex_);
  return mutations_;
}

MutationList IdpServer::mutations() const {
  std::lock_guard lock(mutex_);
  return *mutations_;
}

void IdpServer::reset() {
  {
    std::lock_guard lock(mutex_);
    mutations_ = std::make_shared<const MutationList>();
    log_.clear();
    discovery_counts_.clear();
    checked_nonces_.clear();
  }
  shared_.clear();
  private_.clear();
}

void IdpServer::add_identity(const std::string& name) {
  std::lock_guard lock(mutex_);
  config_.identities.insert(name);
}

bool IdpServer::has_identity(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return config_.identities.contains(name);
}

std::string IdpServer::identity_url(const std::string& name) const {
  return config_.base_url + "/id/" + name;
}

std::string IdpServer::endpoint_url(const std::string& name) const {
  return config_.base_url + (name.empty() ? "/op" : "/op/" + name);
}

std::optional<std::string> IdpServer::identity_name(const std::string& url) const {
  const std::string prefix = config_.base_url + "/id/";
  if (!url.starts_with(prefix)) return std::nullopt;
  auto name = url.substr(prefix.size());
  if (!has_identity(name)) return std::nullopt;
  return name;
}

openid::Association IdpServer::new_private_association(const std::string& endpoint) {
  openid::Association a;
  a.handle = "private-" + openid::random_token(24);
  a.assoc_type = openid::AssocType::hmac_sha256;
  a.session_type = openid::SessionType::no_encryption;
  a.mac_key = openid::random_bytes(openid::mac_key_size(a.assoc_type));
  a.issued_at = now();
  a.expires_in = config_.association_lifetime;
  a.op_endpoint = endpoint;
  private_.store(a);
  return a;
}

OpenIdMessage IdpServer::handle_associate(const OpenIdMessage& request,
                                          const std::string& endpoint) {
  log(Direction::inbound, Phase::association, endpoint, request);
  auto respond = [&](OpenIdMessage m) {
    log(Direction::outbound, Phase::association, endpoint, m);
    return m;
  };

  const auto assoc_type = openid::parse_assoc_type(request.field("assoc_type").value_or(""));
  const auto session_type =
      openid::parse_session_type(request.field("session_type").value_or(""));
  if (!assoc_type || !session_type)
    return respond(unsupported_type("unsupported association or session type"));
  const auto dh_hash = openid::session_hash(*session_type);
  if (dh_hash && openid::digest_size(*dh_hash) != openid::mac_key_size(*assoc_type))
    return respond(unsupported_type("session type does not match association type"));

  openid::Association a;
  a.assoc_type = *assoc_type;
  a.session_type = *session_type;
  a.mac_key = openid::random_bytes(openid::mac_key_size(*assoc_type));
  a.issued_at = now();
  a.expires_in = config_.association_lifetime;
  a.op_endpoint = endpoint;
  a.handle = openid::random_token(32);
  for (const auto& m : *current_mutations())
    if (m.kind == MutationKind::force_handle && !m.value.empty()) a.handle = m.value;

  OpenIdMessage response{{"openid.ns", std::string(openid::kOpenId2Namespace)}};
  response.set_field("assoc_handle", a.handle);
  response.set_field("session_type", std::string(openid::to_string(a.session_type)));
  response.set_field("assoc_type", std::string(openid::to_string(a.assoc_type)));
  response.set_field("expires_in", std::to_string(a.expires_in));

  if (!dh_hash) {
    response.set_field("mac_key", openid::base64_encode(a.mac_key));
  } else {
    try {
      openid::DhParameters params = openid::default_dh_parameters();
      if (const auto p = request.field("dh_modulus")) {
        const auto bytes = openid::base64_decode(*p);
        if (!bytes) return respond(error_message("dh_modulus is not base64"));
        params.modulus = openid::BigUint::from_btwoc(*bytes);
      }
      if (const auto g = request.field("dh_gen")) {
        const auto bytes = openid::base64_decode(*g);
        if (!bytes) return respond(error_message("dh_gen is not base64"));
        params.generator = openid::BigUint::from_btwoc(*bytes);
      }
      openid::validate_dh_parameters(params, config_.allow_test_primes);
      const auto consumer = request.field("dh_consumer_public");
      const auto consumer_bytes = consumer ? openid::base64_decode(*consumer) : std::nullopt;
      if (!consumer_bytes) return respond(error_message("missing or invalid dh_consumer_public"));
      const auto keys = openid::DhKeyPair::generate(params);
      const auto secret =
          openid::dh_derive(keys, openid::BigUint::from_btwoc(*consumer_bytes), *dh_hash);
      response.set_field("dh_server_public", openid::base64_encode(keys.public_key().to_btwoc()));
      response.set_field("enc_mac_key", openid::base64_encode(openid::wrap_mac_key(a.mac_key, secret)));
    } catch (const openid::DhError& e) {
      return respond(error_message(std::string("Diffie-Hellman: ") + e.what()));
    }
  }
  shared_.store(a);
  return respond(std::move(response));
}

std::optional<std::string> IdpServer::handle_checkid(
    const OpenIdMessage& request, const std::string& endpoint,
    const std::optional<std::string>& session_user) {
  log(Direction::inbound, Phase::token, endpoint, request);
  const auto mutations = current_mutations();
  const auto return_to = request.field("return_to");
  if (!return_to || !openid::is_absolute_http_url(*return_to))
    throw std::invalid_argument("checkid request without a usable return_to");
  const bool immediate = request.field("mode") == "checkid_immediate";

  auto finish = [&](std::string location, OpenIdMessage logged) {
    log(Direction::outbound, Phase::token, endpoint, std::move(logged));
    return std::optional<std::string>(std::move(location));
  };
  auto setup_needed = [&] {
    const auto m = OpenIdMessage::with_mode("setup_needed");
    return finish(openid::encode_indirect(m, *return_to), m);
  };

  for (const auto& m : *mutations) {
    if (m.kind != MutationKind::replay_token) continue;
    const auto captured = openid::parse_url(m.value);
    const auto token = openid::decode_indirect(captured ? captured->query : m.value);
    return finish(openid::encode_indirect(token, *return_to), token);
  }

  std::string identity = request.field("identity").value_or("");
  std::string claimed = request.field("claimed_id").value_or(identity);
  if (identity.empty()) throw std::invalid_argument("checkid request without identity");
  if (identity == openid::kIdentifierSelect) {
    std::string chosen;
    if (session_user) {
      chosen = *session_user;
    } else if (config_.auto_approve) {
      std::lock_guard lock(mutex_);
      if (!config_.identities.empty()) chosen = *config_.identities.begin();
    }
    if (chosen.empty()) return immediate ? setup_needed() : std::nullopt;
    identity = claimed = identity_url(chosen);
  }
  if (!config_.auto_approve) {
    if (!session_user) return immediate ? setup_needed() : std::nullopt;
    if (identity_name(identity) != *session_user) return setup_needed();
  }

  openid::Association assoc;
  const auto requested_handle = request.field("assoc_handle");
  const auto shared = requested_handle ? shared_.find(*requested_handle) : std::nullopt;
  const bool use_shared = shared && !shared->expired(now());
  assoc = use_shared ? *shared : new_private_association(endpoint);

  auto token = openid::make_positive_assertion({
      .op_endpoint = endpoint,
      .return_to = *return_to,
      .claimed_id = claimed,
      .identity = identity,
      .response_nonce = nonces_.next(now()),
      .assoc_handle = assoc.handle,
  });
  if (requested_handle && !use_shared) token.set_field("invalidate_handle", *requested_handle);

  std::string redirect_to = *return_to;
  auto apply = [&](const TokenMutation& m) {
    switch (m.kind) {
      case MutationKind::set_field: token.set_field(m.field, m.value); break;
      case MutationKind::drop_field:
        token.erase_field(m.field);
        remove_from_signed(token, m.field);
        break;
      case MutationKind::drop_from_signed: remove_from_signed(token, m.field); break;
      case MutationKind::force_return_to:
        token.set_field("return_to", m.value);
        redirect_to = m.value;
        break;
      case MutationKind::force_identity:
        token.set_field("claimed_id", m.value);
        token.set_field("identity", m.value);
        break;
      default: break;
    }
  };
  for (const auto& m : *mutations)
    if (m.stage == MutationStage::pre_sign) apply(m);

  // Sign with whatever association the (possibly mutated) handle names.
  const auto handle = token.field("assoc_handle").value_or("");
  std::optional<openid::Association> signer = private_.find(handle);
  if (!signer) signer = shared_.find(handle);
  if (!signer) {
    signer = assoc;
    signer->mac_key = openid::random_bytes(signer->mac_key.size());
  }
  try {
    openid::apply_signature(token, *signer);
  } catch (const openid::MissingSignedField&) {
    token.set_field("sig", "");
  }

  for (const auto& m : *mutations)
    if (m.stage == MutationStage::post_sign) apply(m);

  if (!openid::is_absolute_http_url(redirect_to))
    throw std::invalid_argument("mutated return_to is not absolute: " + redirect_to);
  return finish(openid::encode_indirect(token, redirect_to), token);
}

OpenIdMessage IdpServer::handle_check_authentication(const OpenIdMessage& request) {
  const std::string endpoint = request.field("op_endpoint").value_or(config_.base_url + "/op");
  log(Direction::inbound, Phase::check_auth, endpoint, request);
  OpenIdMessage response{{"openid.ns", std::string(openid::kOpenId2Namespace)}};

  bool valid = false;
  const bool malicious = !current_mutations()->empty();
  if (malicious) {
    valid = request.has_field("sig");
  } else {
    auto token = request;
    token.set_field("mode", "id_res");
    const auto handle = token.field("assoc_handle").value_or("");
    const auto assoc = private_.find(handle);
    if (assoc && !assoc->expired(now()) && openid::verify_signature(token, *assoc)) {
      const auto key = handle + "|" + token.field("response_nonce").value_or("");
      std::lock_guard lock(mutex_);
      valid = checked_nonces_.insert(key).second;
    }
  }
  response.set_field("is_valid", valid ? "true" : "false");
  if (const auto inv = request.field("invalidate_handle"); inv && !shared_.find(*inv))
    response.set_field("invalidate_handle", *inv);
  log(Direction::outbound, Phase::check_auth, endpoint, response);
  return response;
}

std::optional<net::HttpResponse> IdpServer::serve_discovery(const std::string& name,
                                                             bool want_xrds) {
  if (!has_identity(name)) return std::nullopt;
  const auto url = identity_url(name);
  log(Direction::inbound, Phase::discovery, url, {});
  const std::string endpoint = endpoint_url(config_.per_identity_endpoints ? name : "");
  const auto mutations = current_mutations();
  int count = 0;
  {
    std::lock_guard lock(mutex_);
    count = ++discovery_counts_[name];
  }

  std::optional<std::string> local_id;
  std::optional<discovery::DiscoveryDocument> doc;
  for (const auto& m : *mutations) {
    if (m.kind == MutationKind::spoof_discovery_local_id && (m.field != "second" || count >= 2))
      local_id = m.value;
    if (m.kind == MutationKind::xxe_payload) {
      if (!m.field.empty()) {
        doc.emplace();
        doc->format = discovery::DocumentFormat::xrds;
        doc->op_endpoint = endpoint;
        doc->raw = m.field;
      } else {
        doc = discovery::render_xxe_probe(endpoint, m.value);
      }
    }
  }
  if (!doc)
    doc = discovery::render_discovery(
        endpoint, local_id,
        want_xrds ? discovery::DocumentFormat::xrds : discovery::DocumentFormat::html);
  log(Direction::outbound, Phase::discovery, url, {}, doc->raw);
  return net::HttpResponse::text(200, doc->raw,
                                 doc->format == discovery::DocumentFormat::xrds
                                     ? std::string(discovery::kXrdsMediaType)
                                     : "text/html");
}

net::HttpResponse IdpServer::handle(const net::HttpRequest& request) {
  const auto url = openid::parse_url(request.url);
  if (!url) return net::HttpResponse::text(400, "bad request URL");
  const std::string& path = url->path;

  try {
    if (path.starts_with("/id/") && request.method == "GET") {
      const bool xrds = request.headers.get("Accept").value_or("").find("xrds+xml") !=
                        std::string::npos;
      if (auto r = serve_discovery(path.substr(4), xrds)) return *r;
      return net::HttpResponse::text(404, "unknown identity");
    }

    if (path == "/op" || path.starts_with("/op/")) {
      const auto message = request_message(request);
      const auto mode = message.field("mode").value_or("");
      const std::string endpoint = config_.base_url + path;
      if (mode == "associate") return direct_response(handle_associate(message, endpoint));
      if (mode == "check_authentication")
        return direct_response(handle_check_authentication(message));
      if (mode == "checkid_setup" || mode == "checkid_immediate") {
        if (auto location = handle_checkid(message, endpoint, request.cookie("idp_session")))
          return net::HttpResponse::redirect(*location);
        return net::HttpResponse::text(200, "<html><body>login required</body></html>",
                                       "text/html");
      }
      return direct_response(error_message("unsupported mode: " + mode));
    }

    if (path == "/login") {
      const auto user = request.param("user").value_or("");
      if (!has_identity(user)) return net::HttpResponse::text(404, "unknown user");
      auto response = net::HttpResponse::text(200, "logged in as " + user);
      response.headers.add("Set-Cookie", "idp_session=" + user + "; Path=/; HttpOnly");
      return response;
    }

    if (config_.control_api && path.starts_with("/control/")) {
      if (path == "/control/mutations" && (request.method == "PUT" || request.method == "POST")) {
        const auto j = nlohmann::ordered_json::parse(request.body);
        auto list = mutations_from_json(j);
        const auto n = list.size();
        set_mutations(std::move(list));
        return net::HttpResponse::json(200, nlohmann::ordered_json{{"armed", n}}.dump());
      }
      if (path == "/control/mutations" && request.method == "GET")
        return net::HttpResponse::json(200, to_json(mutations()).dump());
      if (path == "/control/log" && request.method == "GET") {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& e : drain_log()) arr.push_back(to_json(e));
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

}  // namespace ssoprobe::idp
