#include <gtest/gtest.h>

#include <set>

#include "ssoprobe/discovery/discovery.hpp"
#include "ssoprobe/idp/server.hpp"
#include "ssoprobe/openid/crypto.hpp"
#include "ssoprobe/openid/dh.hpp"
#include "ssoprobe/openid/token.hpp"

namespace ssoprobe::idp {
namespace {

using openid::OpenIdMessage;

constexpr const char* kBase = "https://idp.test";
constexpr const char* kOp = "https://idp.test/op";
constexpr const char* kReturnTo = "https://sp.test/callback";

IdpConfig config(bool auto_approve = true) {
  IdpConfig c;
  c.base_url = kBase;
  c.identities = {"alice", "bob"};
  c.auto_approve = auto_approve;
  c.allow_test_primes = true;
  return c;
}

OpenIdMessage associate_request(const std::string& assoc, const std::string& session) {
  auto m = OpenIdMessage::with_mode("associate");
  m.set_field("assoc_type", assoc);
  m.set_field("session_type", session);
  return m;
}

OpenIdMessage checkid(const std::string& identity, const std::string& handle = "") {
  auto m = OpenIdMessage::with_mode("checkid_setup");
  m.set_field("claimed_id", identity);
  m.set_field("identity", identity);
  m.set_field("return_to", kReturnTo);
  m.set_field("realm", "https://sp.test/");
  if (!handle.empty()) m.set_field("assoc_handle", handle);
  return m;
}

OpenIdMessage decode_location(const std::string& location) {
  const auto url = openid::parse_url(location);
  EXPECT_TRUE(url);
  return openid::decode_indirect(url->query);
}

std::string base_of(const std::string& location) { return openid::parse_url(location)->without_query(); }

TEST(Associate, HonestHandleIsFreshAndStored) {
  IdpServer idp(config());
  const auto r1 = idp.handle_associate(associate_request("HMAC-SHA256", "no-encryption"), kOp);
  const auto r2 = idp.handle_associate(associate_request("HMAC-SHA256", "no-encryption"), kOp);
  const auto handle = r1.field("assoc_handle").value();
  EXPECT_EQ(handle.size(), 32u);
  EXPECT_NE(handle, r2.field("assoc_handle").value());
  const auto stored = idp.associations().find(handle);
  ASSERT_TRUE(stored);
  EXPECT_EQ(openid::base64_encode(stored->mac_key), r1.field("mac_key"));
  EXPECT_EQ(r1.field("expires_in"), "3600");
}

TEST(Associate, ForcedHandle) {
  IdpServer idp(config());
  idp.set_mutations({{MutationKind::force_handle, "", "VICTIM-ALPHA-001"}});
  const auto r = idp.handle_associate(associate_request("HMAC-SHA1", "no-encryption"), kOp);
  EXPECT_EQ(r.field("assoc_handle"), "VICTIM-ALPHA-001");
  EXPECT_TRUE(idp.associations().find("VICTIM-ALPHA-001"));
}

TEST(Associate, SmallPrimeKeyTransport) {
  IdpServer idp(config());
  auto req = associate_request("HMAC-SHA1", "DH-SHA1");
  req.set_field("dh_modulus", openid::base64_encode(openid::BigUint(23).to_btwoc()));
  req.set_field("dh_gen", openid::base64_encode(openid::BigUint(5).to_btwoc()));
  req.set_field("dh_consumer_public", openid::base64_encode(openid::BigUint(8).to_btwoc()));  // 5^6
  const auto r = idp.handle_associate(req, kOp);
  ASSERT_FALSE(r.has_field("error")) << r.field("error").value_or("");

  const auto server_public = openid::base64_decode(r.field("dh_server_public").value()).value();
  std::uint64_t y = 0;
  for (auto b : server_public) y = y * 256 + b;
  std::uint64_t shared = 1;
  for (int i = 0; i < 6; ++i) shared = shared * y % 23;  // Y^6 mod 23 by repeated multiplication
  const auto secret = openid::digest(openid::HashAlgorithm::sha1,
                                     openid::Bytes{static_cast<std::uint8_t>(shared)});
  const auto enc = openid::base64_decode(r.field("enc_mac_key").value()).value();
  ASSERT_EQ(enc.size(), secret.size());
  openid::Bytes mac_key(enc.size());
  for (std::size_t i = 0; i < enc.size(); ++i) mac_key[i] = enc[i] ^ secret[i];
  EXPECT_EQ(mac_key, idp.associations().find(r.field("assoc_handle").value())->mac_key);
}

TEST(Associate, DefaultGroupRoundTrip) {
  IdpServer idp(config());
  const auto keys = openid::DhKeyPair::generate(openid::default_dh_parameters());
  auto req = associate_request("HMAC-SHA256", "DH-SHA256");
  req.set_field("dh_consumer_public", openid::base64_encode(keys.public_key().to_btwoc()));
  const auto r = idp.handle_associate(req, kOp);
  const auto server_public = openid::BigUint::from_btwoc(
      openid::base64_decode(r.field("dh_server_public").value()).value());
  const auto secret = openid::dh_derive(keys, server_public, openid::HashAlgorithm::sha256);
  const auto mac = openid::wrap_mac_key(
      openid::base64_decode(r.field("enc_mac_key").value()).value(), secret);
  EXPECT_EQ(mac, idp.associations().find(r.field("assoc_handle").value())->mac_key);
}

TEST(Associate, ErrorsAreMessages) {
  IdpConfig strict = config();
  strict.allow_test_primes = false;
  IdpServer idp(strict);
  EXPECT_EQ(idp.handle_associate(associate_request("HMAC-MD5", "no-encryption"), kOp)
                .field("error_code"),
            "unsupported-type");
  EXPECT_TRUE(idp.handle_associate(associate_request("HMAC-SHA256", "DH-SHA1"), kOp)
                  .has_field("error"));
  auto small = associate_request("HMAC-SHA1", "DH-SHA1");
  small.set_field("dh_modulus", openid::base64_encode(openid::BigUint(23).to_btwoc()));
  small.set_field("dh_gen", openid::base64_encode(openid::BigUint(5).to_btwoc()));
  small.set_field("dh_consumer_public", openid::base64_encode(openid::BigUint(8).to_btwoc()));
  EXPECT_TRUE(idp.handle_associate(small, kOp).has_field("error"));
  const auto http = idp.handle(net::post_form(kOp, {{"openid.mode", "associate"}}));
  EXPECT_EQ(http.status, 400);
  EXPECT_TRUE(openid::decode_key_value(http.body).has_field("error"));
}

TEST(Checkid, HonestTokenVerifiesUnderSharedAssociation) {
  IdpServer idp(config());
  const auto handle =
      idp.handle_associate(associate_request("HMAC-SHA256", "no-encryption"), kOp).field("assoc_handle").value();
  const auto location = idp.handle_checkid(checkid("https://idp.test/id/alice", handle), kOp, {});
  ASSERT_TRUE(location);
  EXPECT_EQ(base_of(*location), kReturnTo);
  const auto token = decode_location(*location);
  EXPECT_EQ(token.field("mode"), "id_res");
  EXPECT_EQ(token.field("claimed_id"), "https://idp.test/id/alice");
  EXPECT_EQ(token.field("return_to"), kReturnTo);
  EXPECT_EQ(token.field("op_endpoint"), kOp);
  EXPECT_EQ(token.field("assoc_handle"), handle);
  EXPECT_TRUE(openid::verify_signature(token, *idp.associations().find(handle)));
}

TEST(Checkid, StatelessUsesPrivateAssociation) {
  IdpServer idp(config());
  const auto token = decode_location(*idp.handle_checkid(checkid("https://idp.test/id/alice"), kOp, {}));
  EXPECT_FALSE(idp.associations().find(token.field("assoc_handle").value()));
  const auto unknown =
      decode_location(*idp.handle_checkid(checkid("https://idp.test/id/alice", "stale"), kOp, {}));
  EXPECT_EQ(unknown.field("invalidate_handle"), "stale");
}

TEST(Checkid, IdentitySpoofing) {
  IdpServer idp(config());
  idp.set_mutations({{MutationKind::force_identity, "", "https://trusted.test/id/victim"}});
  const auto token =
      decode_location(*idp.handle_checkid(checkid("https://idp.test/id/alice"), kOp, {}));
  EXPECT_EQ(token.field("claimed_id"), "https://trusted.test/id/victim");
  EXPECT_EQ(token.field("identity"), "https://trusted.test/id/victim");
}

TEST(Checkid, RecipientConfusion) {
  IdpServer idp(config());
  idp.set_mutations({{MutationKind::force_return_to, "", "https://attacker.test/collect"}});
  const auto location = *idp.handle_checkid(checkid("https://idp.test/id/alice"), kOp, {});
  EXPECT_EQ(base_of(location), "https://attacker.test/collect");
  EXPECT_EQ(decode_location(location).field("return_to"), "https://attacker.test/collect");
}

TEST(Checkid, MutationLocality) {
  const std::set<std::string> volatile_fields = {"openid.response_nonce", "openid.sig",
                                                 "openid.assoc_handle"};
  struct Case {
    TokenMutation mutation;
    std::set<std::string> touched;
  };
  const std::vector<Case> cases = {
      {{MutationKind::set_field, "op_endpoint", "https://x.test/op"}, {"openid.op_endpoint"}},
      {{MutationKind::drop_field, "identity", ""}, {"openid.identity", "openid.signed"}},
      {{MutationKind::drop_from_signed, "claimed_id", ""}, {"openid.signed"}},
      {{MutationKind::force_identity, "", "https://v.test/id"}, {"openid.claimed_id", "openid.identity"}},
      {{MutationKind::force_return_to, "", "https://a.test/"}, {"openid.return_to"}},
      {{MutationKind::set_field, "claimed_id", "https://v.test/", MutationStage::post_sign},
       {"openid.claimed_id"}},
  };
  for (const auto& c : cases) {
    IdpServer honest(config()), mutated(config());
    mutated.set_mutations({c.mutation});
    const auto a = decode_location(*honest.handle_checkid(checkid("https://idp.test/id/alice"), kOp, {}));
    const auto b = decode_location(*mutated.handle_checkid(checkid("https://idp.test/id/alice"), kOp, {}));
    std::set<std::string> keys;
    for (const auto& [k, v] : a.params()) keys.insert(k);
    for (const auto& [k, v] : b.params()) keys.insert(k);
    std::set<std::string> differing;
    for (const auto& k : keys)
      if (!volatile_fields.contains(k) && a.get(k) != b.get(k)) differing.insert(k);
    EXPECT_EQ(differing, c.touched) << to_string(c.mutation.kind) << " " << c.mutation.field;
  }
}

TEST(Checkid, NeedsSessionWithoutAutoApprove) {
  IdpServer idp(config(false));
  EXPECT_FALSE(idp.handle_checkid(checkid("https://idp.test/id/alice"), kOp, {}));
  const auto other = decode_location(
      *idp.handle_checkid(checkid("https://idp.test/id/alice"), kOp, std::string("bob")));
  EXPECT_EQ(other.field("mode"), "setup_needed");
  auto immediate = checkid("https://idp.test/id/alice");
  immediate.set_field("mode", "checkid_immediate");
  EXPECT_EQ(decode_location(*idp.handle_checkid(immediate, kOp, {})).field("mode"), "setup_needed");
  const auto ok = decode_location(
      *idp.handle_checkid(checkid("https://idp.test/id/alice"), kOp, std::string("alice")));
  EXPECT_EQ(ok.field("mode"), "id_res");
}

TEST(Checkid, IdentifierSelect) {
  IdpServer idp(config(false));
  const auto token = decode_location(*idp.handle_checkid(
      checkid(std::string(openid::kIdentifierSelect)), kOp, std::string("bob")));
  EXPECT_EQ(token.field("claimed_id"), "https://idp.test/id/bob");
  EXPECT_EQ(token.field("identity"), "https://idp.test/id/bob");
}

TEST(Checkid, ReplayToken) {
  IdpServer idp(config());
  const auto captured = *idp.handle_checkid(checkid("https://idp.test/id/alice"), kOp, {});
  idp.set_mutations({{MutationKind::replay_token, "", captured}});
  const auto again = *idp.handle_checkid(checkid("https://idp.test/id/bob"), kOp, {});
  EXPECT_EQ(decode_location(again), decode_location(captured));
}

OpenIdMessage as_check_auth(OpenIdMessage token) {
  token.set_field("mode", "check_authentication");
  return token;
}

TEST(CheckAuthentication, OneShotPrivateOnly) {
  IdpServer idp(config());
  const auto token = decode_location(*idp.handle_checkid(checkid("https://idp.test/id/alice"), kOp, {}));
  EXPECT_EQ(idp.handle_check_authentication(as_check_auth(token)).field("is_valid"), "true");
  EXPECT_EQ(idp.handle_check_authentication(as_check_auth(token)).field("is_valid"), "false");

  auto forged = decode_location(*idp.handle_checkid(checkid("https://idp.test/id/alice"), kOp, {}));
  openid::Association other;
  other.handle = forged.field("assoc_handle").value();
  other.mac_key = openid::random_bytes(32);
  openid::apply_signature(forged, other);
  EXPECT_EQ(idp.handle_check_authentication(as_check_auth(forged)).field("is_valid"), "false");

  const auto handle =
      idp.handle_associate(associate_request("HMAC-SHA256", "no-encryption"), kOp).field("assoc_handle").value();
  const auto shared = decode_location(*idp.handle_checkid(checkid("https://idp.test/id/alice", handle), kOp, {}));
  EXPECT_EQ(idp.handle_check_authentication(as_check_auth(shared)).field("is_valid"), "false");
}

TEST(CheckAuthentication, MaliciousModeValidatesOwnTokens) {
  IdpServer idp(config());
  idp.set_mutations({{MutationKind::spoof_discovery_local_id, "", "https://trusted.test/id/victim"}});
  auto token = decode_location(*idp.handle_checkid(checkid("https://trusted.test/id/victim"), kOp, {}));
  token.set_field("claimed_id", "https://idp.test/id/tampered");
  EXPECT_EQ(idp.handle_check_authentication(as_check_auth(token)).field("is_valid"), "true");
  EXPECT_EQ(idp.handle_check_authentication(as_check_auth(token)).field("is_valid"), "true");
}

TEST(Discovery, HonestAndSpoofed) {
  IdpServer idp(config());
  auto doc = [&](const std::string& accept) {
    auto r = idp.handle(net::get_request(std::string(kBase) + "/id/alice", {{"Accept", accept}}));
    EXPECT_EQ(r.status, 200);
    return discovery::parse_discovery(r.body, r.headers.get("Content-Type").value_or(""));
  };
  const auto honest = doc("text/html");
  EXPECT_EQ(honest.format, discovery::DocumentFormat::html);
  EXPECT_EQ(honest.op_endpoint, kOp);
  EXPECT_FALSE(honest.local_id);
  EXPECT_EQ(doc("application/xrds+xml").format, discovery::DocumentFormat::xrds);

  idp.set_mutations({{MutationKind::spoof_discovery_local_id, "", "https://trusted.test/id/victim"}});
  EXPECT_EQ(doc("text/html").local_id, "https://trusted.test/id/victim");

  idp.set_mutations(
      {{MutationKind::spoof_discovery_local_id, "second", "https://trusted.test/id/victim"}});
  EXPECT_FALSE(doc("text/html").local_id);
  EXPECT_EQ(doc("text/html").local_id, "https://trusted.test/id/victim");

  EXPECT_EQ(idp.handle(net::get_request(std::string(kBase) + "/id/nobody")).status, 404);
}

TEST(Discovery, PerIdentityEndpointsAndXxePayload) {
  IdpConfig c = config();
  c.per_identity_endpoints = true;
  IdpServer idp(c);
  auto r = idp.handle(net::get_request(std::string(kBase) + "/id/bob"));
  EXPECT_EQ(discovery::parse_discovery(r.body, "text/html").op_endpoint, "https://idp.test/op/bob");

  idp.set_mutations({{MutationKind::xxe_payload, "", "http://canary.test/hit"}});
  r = idp.handle(net::get_request(std::string(kBase) + "/id/bob"));
  const auto probe = discovery::parse_xrds_safe(r.body);
  EXPECT_TRUE(probe.xxe_attempt);
  EXPECT_EQ(probe.external_references, std::vector<std::string>{"http://canary.test/hit"});
}

TEST(Log, HonestLoginPhaseOrder) {
  IdpServer idp(config());
  EXPECT_TRUE(idp.drain_log().empty());
  idp.handle(net::get_request(std::string(kBase) + "/id/alice"));
  const auto assoc = idp.handle(net::post_form(
      kOp, {{"openid.ns", std::string(openid::kOpenId2Namespace)},
            {"openid.mode", "associate"},
            {"openid.assoc_type", "HMAC-SHA256"},
            {"openid.session_type", "no-encryption"}}));
  const auto handle = openid::decode_key_value(assoc.body).field("assoc_handle").value();
  const auto redirect = idp.handle(net::get_request(
      openid::encode_indirect(checkid("https://idp.test/id/alice", handle), kOp)));
  EXPECT_EQ(redirect.status, 302);

  const auto entries = idp.drain_log();
  ASSERT_EQ(entries.size(), 6u);
  const Phase expected[] = {Phase::discovery, Phase::discovery, Phase::association,
                            Phase::association, Phase::token, Phase::token};
  for (std::size_t i = 0; i < entries.size(); ++i) {
    EXPECT_EQ(entries[i].phase, expected[i]) << i;
    EXPECT_EQ(entries[i].direction, i % 2 ? Direction::outbound : Direction::inbound);
    if (i) EXPECT_LT(entries[i - 1].seq, entries[i].seq);
  }
  EXPECT_TRUE(idp.drain_log().empty());
}

TEST(Log, InterleavedSessionsKeepOrder) {
  IdpServer idp(config());
  for (int i = 0; i < 5; ++i) {
    idp.handle_checkid(checkid("https://idp.test/id/alice"), kOp, {});
    idp.handle_checkid(checkid("https://idp.test/id/bob"), kOp, {});
  }
  std::uint64_t last_alice = 0, last_bob = 0;
  for (const auto& e : idp.drain_log()) {
    if (e.direction != Direction::inbound) continue;
    auto& last = e.message.field("identity")->ends_with("alice") ? last_alice : last_bob;
    EXPECT_GT(e.seq, last);
    last = e.seq;
  }
}

TEST(ControlApi, MutationsLogReset) {
  IdpServer idp(config());
  auto put = net::HttpRequest{"PUT", std::string(kBase) + "/control/mutations", {},
                              R"({"mutations":[{"kind":"FORCE_RETURN_TO","value":"https://a.test/"}]})"};
  auto r = idp.handle(put);
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(nlohmann::json::parse(r.body)["armed"], 1);
  EXPECT_EQ(idp.mutations().size(), 1u);

  idp.handle(net::get_request(std::string(kBase) + "/id/alice"));
  r = idp.handle(net::get_request(std::string(kBase) + "/control/log"));
  const auto log = nlohmann::json::parse(r.body);
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log[0]["phase"], "discovery");
  EXPECT_EQ(log[1]["direction"], "outbound");
  EXPECT_EQ(nlohmann::json::parse(idp.handle(net::get_request(std::string(kBase) + "/control/log")).body).size(), 0u);

  EXPECT_EQ(idp.handle({"POST", std::string(kBase) + "/control/reset", {}, ""}).status, 200);
  EXPECT_TRUE(idp.mutations().empty());
  put.body = R"([{"kind":"NOPE"}])";
  EXPECT_EQ(idp.handle(put).status, 400);
}

TEST(ControlApi, SessionCookieLogin) {
  IdpServer idp(config(false));
  const auto r = idp.handle(net::get_request(std::string(kBase) + "/login?user=alice"));
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.headers.get("Set-Cookie").value().substr(0, 18), "idp_session=alice;");
  auto req = net::get_request(openid::encode_indirect(checkid("https://idp.test/id/alice"), kOp));
  EXPECT_EQ(idp.handle(req).status, 200);  // login page
  req.headers.set("Cookie", "idp_session=alice");
  EXPECT_EQ(idp.handle(req).status, 302);
}

TEST(Mutation, JsonRoundTrip) {
  const MutationList list = {
      {MutationKind::set_field, "claimed_id", "https://v/", MutationStage::post_sign},
      {MutationKind::drop_from_signed, "claimed_id", ""},
      {MutationKind::spoof_discovery_local_id, "second", "https://v/"},
  };
  const auto text = to_json(list).dump();
  EXPECT_EQ(mutations_from_json(nlohmann::ordered_json::parse(text)), list);
  EXPECT_EQ(text,
            R"([{"kind":"SET_FIELD","field":"claimed_id","value":"https://v/","stage":"post_sign"},)"
            R"({"kind":"DROP_FROM_SIGNED","field":"claimed_id"},)"
            R"({"kind":"SPOOF_DISCOVERY_LOCAL_ID","field":"second","value":"https://v/"}])");
}

}  // namespace
}  // namespace ssoprobe::idp
