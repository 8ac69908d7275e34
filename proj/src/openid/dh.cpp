#include "ssoprobe/openid/dh.hpp"

#include <openssl/bn.h>
#include <openssl/crypto.h>

#include <stdexcept>

#include "ssoprobe/openid/errors.hpp"

namespace ssoprobe::openid {
namespace {

struct CtxDeleter {
  void operator()(BN_CTX* ctx) const noexcept { BN_CTX_free(ctx); }
};

BIGNUM* checked(BIGNUM* bn) {
  if (bn == nullptr) throw std::bad_alloc();
  return bn;
}

constexpr std::string_view kDefaultModulus =
    "155172898181473697471232257763715539915724801966915404479707795314057629378541917580651227"
    "423698188993727816152646631438561595825688188889951272158842675419950341258706556549803580"
    "104870537681476726513255747040765857479291291572334510643245094715007229621094194349783925"
    "984760375594985848253359305585439638443";

}  // namespace

void BigUint::Deleter::operator()(bignum_st* bn) const noexcept { BN_free(bn); }

BigUint::BigUint() : bn_(checked(BN_new())) {}

BigUint::BigUint(unsigned long long value) : BigUint() {
  if (BN_set_word(bn_.get(), static_cast<BN_ULONG>(value)) != 1) throw std::bad_alloc();
}

BigUint::BigUint(const BigUint& other) : bn_(checked(BN_dup(other.bn_.get()))) {}
BigUint::BigUint(BigUint&&) noexcept = default;
BigUint& BigUint::operator=(BigUint&&) noexcept = default;
BigUint::~BigUint() = default;

BigUint& BigUint::operator=(const BigUint& other) {
  if (this != &other) bn_.reset(checked(BN_dup(other.bn_.get())));
  return *this;
}

BigUint BigUint::from_decimal(std::string_view text) {
  BigUint out;
  BIGNUM* raw = out.bn_.release();
  const std::string copy(text);
  const int used = BN_dec2bn(&raw, copy.c_str());
  out.bn_.reset(raw);
  if (used == 0 || static_cast<std::size_t>(used) != copy.size() || BN_is_negative(raw))
    throw std::invalid_argument("not a decimal unsigned integer: " + copy);
  return out;
}

BigUint BigUint::from_big_endian(std::span<const std::uint8_t> bytes) {
  BigUint out;
  if (BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), out.bn_.get()) == nullptr)
    throw std::bad_alloc();
  return out;
}

BigUint BigUint::from_btwoc(std::span<const std::uint8_t> bytes) {
  if (!bytes.empty() && (bytes[0] & 0x80) != 0)
    throw DhError("btwoc value is negative");
  return from_big_endian(bytes);
}

BigUint BigUint::random_range(const BigUint& low, const BigUint& high) {
  if (!(low < high)) throw std::invalid_argument("empty random range");
  const BigUint span = high - low;
  BigUint offset;
  if (BN_rand_range(offset.bn_.get(), span.bn_.get()) != 1)
    throw std::runtime_error("BN_rand_range failed");
  BigUint out;
  if (BN_add(out.bn_.get(), offset.bn_.get(), low.bn_.get()) != 1) throw std::bad_alloc();
  return out;
}

std::string BigUint::to_decimal() const {
  char* text = BN_bn2dec(bn_.get());
  if (text == nullptr) throw std::bad_alloc();
  std::string out(text);
  OPENSSL_free(text);
  return out;
}

Bytes BigUint::to_big_endian() const {
  Bytes out(static_cast<std::size_t>(BN_num_bytes(bn_.get())));
  BN_bn2bin(bn_.get(), out.data());
  return out;
}

Bytes BigUint::to_btwoc() const {
  Bytes raw = to_big_endian();
  if (raw.empty()) return Bytes{0};
  if ((raw[0] & 0x80) != 0) raw.insert(raw.begin(), 0);
  return raw;
}

unsigned BigUint::bit_length() const { return static_cast<unsigned>(BN_num_bits(bn_.get())); }

BigUint BigUint::mod_exp(const BigUint& exponent, const BigUint& modulus) const {
  std::unique_ptr<BN_CTX, CtxDeleter> ctx(BN_CTX_new());
  if (!ctx) throw std::bad_alloc();
  BigUint out;
  if (BN_mod_exp(out.bn_.get(), bn_.get(), exponent.bn_.get(), modulus.bn_.get(), ctx.get()) != 1)
    throw DhError("modular exponentiation failed");
  return out;
}

BigUint BigUint::operator-(const BigUint& other) const {
  BigUint out;
  if (BN_sub(out.bn_.get(), bn_.get(), other.bn_.get()) != 1) throw std::bad_alloc();
  if (BN_is_negative(out.bn_.get())) throw std::underflow_error("BigUint subtraction underflow");
  return out;
}

int compare(const BigUint& a, const BigUint& b) { return BN_cmp(a.bn_.get(), b.bn_.get()); }

const DhParameters& default_dh_parameters() {
  static const DhParameters params{BigUint::from_decimal(kDefaultModulus), BigUint(2)};
  return params;
}

void validate_dh_parameters(const DhParameters& params, bool allow_test_primes) {
  if (!(BigUint(1) < params.generator) || !(params.generator < params.modulus))
    throw DhError("generator must satisfy 1 < g < p");
  if (params.modulus.bit_length() < kMinProductionModulusBits && !allow_test_primes)
    throw DhError("modulus of " + std::to_string(params.modulus.bit_length()) +
                  " bits is only allowed with test primes enabled");
}

DhKeyPair::DhKeyPair(DhParameters params, BigUint private_exponent)
    : params_(std::move(params)), private_(std::move(private_exponent)) {
  const BigUint upper = params_.modulus - BigUint(1);
  if (private_ < BigUint(1) || !(private_ < upper))
    throw DhError("private exponent must satisfy 1 <= x < p-1");
}

DhKeyPair DhKeyPair::generate(const DhParameters& params) {
  return DhKeyPair(params, BigUint::random_range(BigUint(1), params.modulus - BigUint(1)));
}

BigUint DhKeyPair::public_key() const {
  return params_.generator.mod_exp(private_, params_.modulus);
}

Bytes dh_derive(const DhParameters& params, const BigUint& private_exponent,
                const BigUint& peer_public, HashAlgorithm hash) {
  if (!(BigUint(1) < peer_public) || !(peer_public < params.modulus))
    throw DhError("peer public key out of range (must satisfy 1 < y < p)");
  const BigUint shared = peer_public.mod_exp(private_exponent, params.modulus);
  const Bytes encoded = shared.to_btwoc();
  return digest(hash, encoded);
}

Bytes dh_derive(const DhKeyPair& keys, const BigUint& peer_public, HashAlgorithm hash) {
  return dh_derive(keys.parameters(), keys.private_exponent(), peer_public, hash);
}

Bytes wrap_mac_key(std::span<const std::uint8_t> mac_key,
                   std::span<const std::uint8_t> secret_digest) {
  if (mac_key.size() != secret_digest.size())
    throw DhError("MAC key length " + std::to_string(mac_key.size()) +
                  " does not match digest length " + std::to_string(secret_digest.size()));
  Bytes out(mac_key.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mac_key[i] ^ secret_digest[i];
  return out;
}

}  // namespace ssoprobe::openid
