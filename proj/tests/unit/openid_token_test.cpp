#include <gtest/gtest.h>

#include <random>
#include <set>

#include "ssoprobe/openid/association.hpp"
#include "ssoprobe/openid/crypto.hpp"
#include "ssoprobe/openid/errors.hpp"
#include "ssoprobe/openid/nonce.hpp"
#include "ssoprobe/openid/token.hpp"

namespace ssoprobe::openid {
namespace {

Association sha1_assoc(Bytes key) {
  Association a;
  a.handle = "alpha";
  a.mac_key = std::move(key);
  a.assoc_type = AssocType::hmac_sha1;
  a.session_type = SessionType::dh_sha1;
  a.op_endpoint = "https://idp.example/op";
  return a;
}

OpenIdMessage honest_token(std::int64_t now) {
  return make_positive_assertion({
      .op_endpoint = "https://idp.example/op",
      .return_to = "https://sp.example/callback",
      .claimed_id = "https://idp.example/id/victim",
      .identity = "https://idp.example/id/victim",
      .response_nonce = make_nonce(now, "x1"),
      .assoc_handle = "alpha",
  });
}

TEST(Signature, FrozenHmacVector) {
  OpenIdMessage token{{"openid.mode", "id_res"}, {"openid.signed", "mode"}};
  const auto assoc = sha1_assoc(Bytes(20, 0));
  EXPECT_EQ(signature_base_string(token), "mode:id_res\n");
  EXPECT_EQ(sign_token(token, assoc), "4wG7kOrQFN4tGe6WgCZFRb0hurg=");
}

TEST(Signature, MissingSignedField) {
  OpenIdMessage token{{"openid.mode", "id_res"}, {"openid.signed", "mode,claimed_id"}};
  try {
    (void)signature_base_string(token);
    FAIL() << "expected MissingSignedField";
  } catch (const MissingSignedField& e) {
    EXPECT_EQ(e.field(), "claimed_id");
  }
  EXPECT_FALSE(verify_signature(token, sha1_assoc(Bytes(20, 0))));
}

TEST(Signature, ExcludesUnsignedFields) {
  auto token = honest_token(1'700'000'000);
  const auto assoc = sha1_assoc(random_bytes(20));
  apply_signature(token, assoc);
  token.set_field("extra", "anything");
  EXPECT_TRUE(verify_signature(token, assoc));
}

TEST(Signature, RoundTripAndSingleFieldFalsification) {
  std::mt19937_64 rng(0x519);
  for (int i = 0; i < 200; ++i) {
    auto assoc = sha1_assoc(random_bytes(20));
    if (i % 2) {
      assoc.assoc_type = AssocType::hmac_sha256;
      assoc.mac_key = random_bytes(32);
    }
    auto token = honest_token(1'700'000'000 + i);
    apply_signature(token, assoc);
    ASSERT_TRUE(verify_signature(token, assoc));
    for (const auto& field : signed_fields(token)) {
      auto mutated = token;
      mutated.set_field(field, *token.field(field) + "x");
      ASSERT_FALSE(verify_signature(mutated, assoc)) << field;
    }
    auto other = assoc;
    other.mac_key[rng() % other.mac_key.size()] ^= 0x01;
    ASSERT_FALSE(verify_signature(token, other));
  }
}

TEST(Signature, SignedListOrder) {
  const auto token = honest_token(0);
  EXPECT_EQ(join_signed(signed_fields(token)),
            "op_endpoint,claimed_id,identity,return_to,response_nonce,assoc_handle");
  for (const auto required : kRequiredSignedFields) {
    const auto fields = signed_fields(token);
    EXPECT_NE(std::find(fields.begin(), fields.end(), required), fields.end()) << required;
  }
}

TEST(Crypto, Base64) {
  EXPECT_EQ(base64_encode(as_bytes("")), "");
  EXPECT_EQ(base64_encode(as_bytes("f")), "Zg==");
  EXPECT_EQ(base64_encode(as_bytes("foob")), "Zm9vYg==");
  EXPECT_EQ(base64_encode(as_bytes("foobar")), "Zm9vYmFy");
  EXPECT_EQ(base64_decode("Zm9vYmE="), to_bytes("fooba"));
  EXPECT_FALSE(base64_decode("Zm9*"));
  EXPECT_FALSE(base64_decode("Zm9"));
}

TEST(Nonce, UtcFormat) {
  EXPECT_EQ(format_utc(0), "1970-01-01T00:00:00Z");
  EXPECT_EQ(format_utc(951782400), "2000-02-29T00:00:00Z");
  EXPECT_EQ(parse_utc("2005-05-15T17:11:51Z"), 1116177111);
  EXPECT_FALSE(parse_utc("2005-13-15T17:11:51Z"));
  EXPECT_FALSE(parse_utc("2005-05-15 17:11:51Z"));
  EXPECT_EQ(nonce_timestamp("2005-05-15T17:11:51ZUNIQUE"), 1116177111);
  EXPECT_FALSE(nonce_timestamp("garbage"));
}

TEST(Nonce, UniqueAndParseable) {
  NonceGenerator generator;
  std::set<std::string> seen;
  const std::int64_t now = 1'700'000'000;
  for (int i = 0; i < 10000; ++i) {
    const auto nonce = generator.next(now + i / 100);
    ASSERT_LE(nonce.size(), kMaxNonceLength);
    ASSERT_TRUE(seen.insert(nonce).second) << nonce;
    ASSERT_EQ(nonce_timestamp(nonce), now + i / 100) << nonce;
  }
}

TEST(Association, StoreLookup) {
  AssociationStore store;
  auto a = sha1_assoc(Bytes(20, 1));
  auto b = sha1_assoc(Bytes(20, 2));
  b.op_endpoint = "https://attacker.example/op";
  store.store(a);
  store.store(b);
  EXPECT_EQ(store.find("alpha")->mac_key, b.mac_key);
  EXPECT_EQ(store.find("https://idp.example/op", "alpha")->mac_key, a.mac_key);
  EXPECT_FALSE(store.find("https://other/op", "alpha"));
  EXPECT_TRUE(store.find_usable("https://idp.example/op", 100));
  EXPECT_FALSE(store.find_usable("https://idp.example/op", 3600));
  EXPECT_TRUE(valid_handle("{HMAC-SHA1}{abc}"));
  EXPECT_FALSE(valid_handle(""));
  EXPECT_FALSE(valid_handle("has space"));
  EXPECT_EQ(lifetime_preset("google"), 13 * 3600);
}

}  // namespace
}  // namespace ssoprobe::openid
