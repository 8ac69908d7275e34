#include <gtest/gtest.h>

#include <random>

#include "ssoprobe/openid/message.hpp"
#include "ssoprobe/openid/url.hpp"
#include "support/generators.hpp"

namespace ssoprobe::openid {
namespace {

TEST(KeyValueCodec, EncodesSingleParam) {
  EXPECT_EQ(encode_key_value(OpenIdMessage{{"openid.mode", "id_res"}}), "mode:id_res\n");
}

TEST(KeyValueCodec, EmptyMessageIsEmptyBody) { EXPECT_EQ(encode_key_value(OpenIdMessage{}), ""); }

TEST(KeyValueCodec, KeepsOrder) {
  const OpenIdMessage m{{"openid.ns", "http://specs.openid.net/auth/2.0"},
                        {"openid.mode", "error"}};
  EXPECT_EQ(encode_key_value(m), "ns:http://specs.openid.net/auth/2.0\nmode:error\n");
}

TEST(KeyValueCodec, RejectsForbiddenCharacters) {
  EXPECT_THROW(encode_key_value(OpenIdMessage{{"openid.mo:de", "x"}}), CodecError);
  EXPECT_THROW(encode_key_value(OpenIdMessage{{"openid.mode", "a\nb"}}), CodecError);
  EXPECT_THROW(encode_key_value(OpenIdMessage{{"openid.mo\nde", "x"}}), CodecError);
}

TEST(KeyValueCodec, DecodesAndPreservesDuplicates) {
  EXPECT_EQ(decode_key_value("mode:id_res\n"), (OpenIdMessage{{"openid.mode", "id_res"}}));
  const auto dup = decode_key_value("mode:a\nmode:b\n");
  ASSERT_EQ(dup.size(), 2u);
  EXPECT_EQ(dup.params()[0], (OpenIdMessage::Param{"openid.mode", "a"}));
  EXPECT_EQ(dup.params()[1], (OpenIdMessage::Param{"openid.mode", "b"}));
}

TEST(KeyValueCodec, ValueMayContainColons) {
  const auto m = decode_key_value("op_endpoint:https://idp/op\n");
  EXPECT_EQ(m.field("op_endpoint"), "https://idp/op");
}

TEST(KeyValueCodec, LineWithoutColonIsError) {
  EXPECT_THROW(decode_key_value("garbage-without-colon\n"), CodecError);
}

TEST(KeyValueCodec, RoundTripProperty) {
  std::mt19937_64 rng(0x5eed01);
  for (int i = 0; i < 10000; ++i) {
    const OpenIdMessage m = testing::random_message(rng);
    ASSERT_EQ(decode_key_value(encode_key_value(m)), m) << "iteration " << i;
  }
}

TEST(IndirectCodec, AppendsQuery) {
  EXPECT_EQ(encode_indirect(OpenIdMessage{{"openid.mode", "id_res"}}, "http://sp/cb"),
            "http://sp/cb?openid.mode=id_res");
}

TEST(IndirectCodec, PercentEncodesSpaces) {
  EXPECT_EQ(encode_indirect(OpenIdMessage{{"openid.x", "a b"}}, "http://sp/cb"),
            "http://sp/cb?openid.x=a%20b");
}

TEST(IndirectCodec, MergesExistingQuery) {
  const auto url = encode_indirect(OpenIdMessage{{"openid.mode", "id_res"}}, "http://sp/cb?x=1");
  const auto parsed = parse_url(url);
  ASSERT_TRUE(parsed);
  const auto params = parse_query(parsed->query);
  ASSERT_EQ(params.size(), 2u);
  EXPECT_EQ(params[0], (std::pair<std::string, std::string>{"x", "1"}));
  EXPECT_EQ(params[1], (std::pair<std::string, std::string>{"openid.mode", "id_res"}));
}

TEST(IndirectCodec, RejectsRelativeBase) {
  EXPECT_THROW(encode_indirect(OpenIdMessage{}, "/cb"), CodecError);
  EXPECT_THROW(encode_indirect(OpenIdMessage{}, "ftp://sp/cb"), CodecError);
}

TEST(IndirectCodec, RoundTripProperty) {
  std::mt19937_64 rng(0x5eed02);
  for (int i = 0; i < 2000; ++i) {
    const OpenIdMessage m = testing::random_message(rng);
    const auto url = parse_url(encode_indirect(m, "https://sp.example/cb?keep=1"));
    ASSERT_TRUE(url);
    ASSERT_EQ(decode_indirect(url->query), m) << "iteration " << i;
  }
}

TEST(Message, CanonicalizationIsExplicit) {
  OpenIdMessage m{{"openid.a", "1"}, {"openid.b", "x"}, {"openid.a", "2"}};
  EXPECT_EQ(m.count("openid.a"), 2u);
  EXPECT_TRUE(m.has_duplicates());
  EXPECT_EQ(m.canonicalized(DuplicateResolution::first_wins),
            (OpenIdMessage{{"openid.a", "1"}, {"openid.b", "x"}}));
  EXPECT_EQ(m.canonicalized(DuplicateResolution::last_wins),
            (OpenIdMessage{{"openid.a", "2"}, {"openid.b", "x"}}));
}

TEST(Url, ParsesAndNormalizes) {
  const auto url = parse_url("HTTP://Example.COM:80/a/b?q=1#frag");
  ASSERT_TRUE(url);
  EXPECT_EQ(url->scheme, "http");
  EXPECT_EQ(url->host, "example.com");
  EXPECT_EQ(url->port, 0);
  EXPECT_EQ(url->path, "/a/b");
  EXPECT_EQ(url->query, "q=1");
  EXPECT_EQ(url->without_query(), "http://example.com/a/b");
  EXPECT_EQ(normalize_identifier("HTTPS://MyIdP.com/Bob"), "https://myidp.com/Bob");
  EXPECT_FALSE(parse_url("http://"));
  EXPECT_FALSE(parse_url("http://host:99999/"));
  EXPECT_FALSE(parse_url("mailto:x@y"));
}

}  // namespace
}  // namespace ssoprobe::openid
