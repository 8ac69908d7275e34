#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "ssoprobe/openid/crypto.hpp"

struct bignum_st;

namespace ssoprobe::openid {

/// Arbitrary-precision unsigned integer (value type over an OpenSSL BIGNUM).
class BigUint {
 public:
  BigUint();
  BigUint(unsigned long long value);  // NOLINT(google-explicit-constructor)
  BigUint(const BigUint& other);
  BigUint(BigUint&&) noexcept;
  BigUint& operator=(const BigUint& other);
  BigUint& operator=(BigUint&&) noexcept;
  ~BigUint();

  static BigUint from_decimal(std::string_view text);
  static BigUint from_big_endian(std::span<const std::uint8_t> bytes);
  /// Decodes a btwoc (big-endian two's complement) positive integer.
  static BigUint from_btwoc(std::span<const std::uint8_t> bytes);
  /// Uniform in [low, high).
  static BigUint random_range(const BigUint& low, const BigUint& high);

  std::string to_decimal() const;
  Bytes to_big_endian() const;
  /// Minimal big-endian encoding with a leading zero byte when the high bit is set.
  Bytes to_btwoc() const;
  unsigned bit_length() const;

  BigUint mod_exp(const BigUint& exponent, const BigUint& modulus) const;
  BigUint operator-(const BigUint& other) const;

  friend int compare(const BigUint& a, const BigUint& b);
  friend bool operator==(const BigUint& a, const BigUint& b) { return compare(a, b) == 0; }
  friend bool operator<(const BigUint& a, const BigUint& b) { return compare(a, b) < 0; }
  friend bool operator<=(const BigUint& a, const BigUint& b) { return compare(a, b) <= 0; }
  friend bool operator>(const BigUint& a, const BigUint& b) { return compare(a, b) > 0; }

 private:
  struct Deleter {
    void operator()(bignum_st* bn) const noexcept;
  };
  std::unique_ptr<bignum_st, Deleter> bn_;
};

struct DhParameters {
  BigUint modulus;
  BigUint generator;
};

/// The OpenID 2.0 default group (1024-bit prime, generator 2).
const DhParameters& default_dh_parameters();

inline constexpr unsigned kMinProductionModulusBits = 512;

/// Checks 1 < g < p. Moduli below kMinProductionModulusBits are rejected
/// unless allow_test_primes is set.
void validate_dh_parameters(const DhParameters& params, bool allow_test_primes);

class DhKeyPair {
 public:
  DhKeyPair(DhParameters params, BigUint private_exponent);
  static DhKeyPair generate(const DhParameters& params);

  const DhParameters& parameters() const noexcept { return params_; }
  const BigUint& private_exponent() const noexcept { return private_; }
  BigUint public_key() const;

 private:
  DhParameters params_;
  BigUint private_;
};

/// H(btwoc(peer_public ^ private mod p)). Throws DhError unless 1 < peer_public < p.
Bytes dh_derive(const DhParameters& params, const BigUint& private_exponent,
                const BigUint& peer_public, HashAlgorithm hash);
Bytes dh_derive(const DhKeyPair& keys, const BigUint& peer_public, HashAlgorithm hash);

/// XOR key transport; applying it twice with the same digest is the identity.
Bytes wrap_mac_key(std::span<const std::uint8_t> mac_key,
                   std::span<const std::uint8_t> secret_digest);

}  // namespace ssoprobe::openid
