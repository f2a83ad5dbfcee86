#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "dcmb/bytes.hpp"

namespace dcmb {

/// Initializes libsodium once; every entry point below calls it.
void ensure_crypto_initialized();

Digest sha256(ByteView data);
Digest sha256(std::string_view text);

/// Source of random bytes. Each simulation context owns its own instance.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint64_t next_u64();
  /// Uniform in [0, bound). bound must be non-zero.
  std::uint64_t uniform(std::uint64_t bound);
};

/// OS entropy via libsodium.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

/// ChaCha20 keystream keyed by SHA-256(seed || stream label). Two instances
/// with equal (seed, label) produce identical byte sequences.
class DeterministicRandom final : public RandomSource {
 public:
  explicit DeterministicRandom(std::uint64_t seed, std::string_view stream = {});

  void fill(std::span<std::uint8_t> out) override;

 private:
  void refill();

  std::array<std::uint8_t, 32> key_{};
  std::array<std::uint8_t, 64> block_{};
  std::size_t used_ = 64;
  std::uint32_t counter_ = 0;
  std::uint32_t nonce_hi_ = 0;
};

constexpr std::size_t kPublicKeySize = 32;
constexpr std::size_t kSignatureSize = 64;

using PublicKey = std::array<std::uint8_t, kPublicKeySize>;
using Signature = std::array<std::uint8_t, kSignatureSize>;

/// Ed25519 key pair. Signatures are deterministic.
class SigningKey {
 public:
  static SigningKey from_seed(const std::array<std::uint8_t, 32>& seed);
  static SigningKey generate(RandomSource& rng);

  const PublicKey& public_key() const noexcept { return public_key_; }
  Signature sign(ByteView message) const;

 private:
  SigningKey() = default;

  PublicKey public_key_{};
  std::array<std::uint8_t, 64> secret_key_{};
};

bool verify_signature(const PublicKey& key, ByteView message, const Signature& sig);

}  // namespace dcmb
