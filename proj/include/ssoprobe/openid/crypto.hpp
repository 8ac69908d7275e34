#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssoprobe::openid {

using Bytes = std::vector<std::uint8_t>;

enum class HashAlgorithm { sha1, sha256 };

std::size_t digest_size(HashAlgorithm algorithm);

Bytes digest(HashAlgorithm algorithm, std::span<const std::uint8_t> data);
Bytes hmac(HashAlgorithm algorithm, std::span<const std::uint8_t> key,
           std::span<const std::uint8_t> data);

Bytes to_bytes(std::string_view text);
std::span<const std::uint8_t> as_bytes(std::string_view text);

// RFC 4648 standard alphabet with padding.
std::string base64_encode(std::span<const std::uint8_t> data);
std::optional<Bytes> base64_decode(std::string_view text);

Bytes random_bytes(std::size_t count);
/// Random token over [A-Za-z0-9], suitable for handles and nonce suffixes.
std::string random_token(std::size_t length);

bool constant_time_equal(std::string_view a, std::string_view b);

}  // namespace ssoprobe::openid
