#include "dcmb/crypto.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include <sodium.h>

#include "dcmb/errors.hpp"

namespace dcmb {

void ensure_crypto_initialized() {
  static const int status = sodium_init();
  if (status < 0) throw std::runtime_error("libsodium initialization failed");
}

Digest sha256(ByteView data) {
  ensure_crypto_initialized();
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Digest sha256(std::string_view text) {
  return sha256(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> raw{};
  fill(raw);
  std::uint64_t v = 0;
  for (auto b : raw) v = v << 8 | b;
  return v;
}

std::uint64_t RandomSource::uniform(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform: zero bound");
  // rejection sampling removes modulo bias
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v = 0;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  ensure_crypto_initialized();
  randombytes_buf(out.data(), out.size());
}

DeterministicRandom::DeterministicRandom(std::uint64_t seed, std::string_view stream) {
  Bytes material = to_bytes("dcmb/rng/v1");
  for (int i = 7; i >= 0; --i) material.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
  append(material, ByteView(reinterpret_cast<const std::uint8_t*>(stream.data()), stream.size()));
  key_ = sha256(material);
}

void DeterministicRandom::refill() {
  std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
  for (int i = 0; i < 4; ++i) nonce[i] = static_cast<std::uint8_t>(nonce_hi_ >> (8 * i));
  block_.fill(0);
  crypto_stream_chacha20_ietf_xor_ic(block_.data(), block_.data(), block_.size(), nonce.data(), counter_,
                                     key_.data());
  if (++counter_ == 0) ++nonce_hi_;
  used_ = 0;
}

void DeterministicRandom::fill(std::span<std::uint8_t> out) {
  ensure_crypto_initialized();
  std::size_t written = 0;
  while (written < out.size()) {
    if (used_ == block_.size()) refill();
    const std::size_t n = std::min(out.size() - written, block_.size() - used_);
    std::memcpy(out.data() + written, block_.data() + used_, n);
    used_ += n;
    written += n;
  }
}

SigningKey SigningKey::from_seed(const std::array<std::uint8_t, 32>& seed) {
  ensure_crypto_initialized();
  SigningKey key;
  crypto_sign_ed25519_seed_keypair(key.public_key_.data(), key.secret_key_.data(), seed.data());
  return key;
}

SigningKey SigningKey::generate(RandomSource& rng) {
  std::array<std::uint8_t, 32> seed{};
  rng.fill(seed);
  return from_seed(seed);
}

Signature SigningKey::sign(ByteView message) const {
  Signature sig{};
  crypto_sign_ed25519_detached(sig.data(), nullptr, message.data(), message.size(), secret_key_.data());
  return sig;
}

bool verify_signature(const PublicKey& key, ByteView message, const Signature& sig) {
  ensure_crypto_initialized();
  return crypto_sign_ed25519_verify_detached(sig.data(), message.data(), message.size(), key.data()) == 0;
}

}  // namespace dcmb
