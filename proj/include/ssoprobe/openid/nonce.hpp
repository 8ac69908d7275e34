#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ssoprobe::openid {

inline constexpr std::size_t kMaxNonceLength = 255;

/// "YYYY-MM-DDThh:mm:ssZ"
std::string format_utc(std::int64_t seconds);
std::optional<std::int64_t> parse_utc(std::string_view text);

/// Creation time encoded in a response nonce, if its prefix is a valid instant.
std::optional<std::int64_t> nonce_timestamp(std::string_view nonce);

/// Issues UTC-prefixed nonces whose suffix is unique per generator.
class NonceGenerator {
 public:
  std::string next(std::int64_t now);

 private:
  std::atomic<std::uint64_t> counter_{0};
};

/// A nonce for `now` with an explicit suffix (back-dating, replays).
std::string make_nonce(std::int64_t timestamp, std::string_view suffix);

}  // namespace ssoprobe::openid
