#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "ssoprobe/openid/message.hpp"

namespace ssoprobe::testing {

inline std::string random_text(std::mt19937_64& rng, std::size_t max_len, bool allow_colon) {
  static constexpr std::string_view kAlphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 -._~/?#[]@!$&'()*+,;=%\t\"<>";
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, kAlphabet.size() - 1);
  std::uniform_int_distribution<int> wide(0, 15);
  std::string out;
  const std::size_t n = len(rng);
  while (out.size() < n) {
    if (wide(rng) == 0) {
      out += "\xC3\xA9";  // é, multi-byte
      continue;
    }
    char c = kAlphabet[pick(rng)];
    if (c == ':' && !allow_colon) c = '_';
    out.push_back(c);
  }
  if (allow_colon && wide(rng) == 1) out += ":";
  return out;
}

/// Message whose keys all carry the openid. prefix and contain no ':' or '\n'.
inline openid::OpenIdMessage random_message(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 12);
  std::uniform_int_distribution<int> dup(0, 5);
  openid::OpenIdMessage message;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    std::string key = "openid." + random_text(rng, 12, false);
    if (dup(rng) == 0 && !message.empty()) key = message.params().front().first;
    message.add(std::move(key), random_text(rng, 40, true));
  }
  return message;
}

}  // namespace ssoprobe::testing
