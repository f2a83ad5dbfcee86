#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "dcmb/argon2.hpp"
#include "dcmb/bytes.hpp"
#include "dcmb/crypto.hpp"

namespace dcmb {

constexpr std::size_t kDefaultSaltLength = 16;

struct Salt {
  Bytes bytes;

  /// UTF-8 text used byte-for-byte, e.g. Salt::from_text("fjpd7").
  static Salt from_text(std::string_view text) { return Salt{to_bytes(text)}; }

  bool operator==(const Salt&) const = default;
};

Salt generate_salt(RandomSource& rng, std::size_t length = kDefaultSaltLength);

/// Memory-hard hash parameters for commitments.
struct HashParams {
  Argon2Variant variant = Argon2Variant::id;
  std::uint32_t memory_kib = 8192;
  std::uint32_t iterations = 1;
  std::uint32_t parallelism = 1;
  std::uint32_t digest_len = 32;

  /// 64 MiB, 3 passes.
  static HashParams production();
  /// 8 MiB, 1 pass.
  static HashParams test();

  /// Canonical identifier, e.g. "argon2id:m=8192,t=1,p=1,len=32".
  /// parse(id()) round-trips, so an on-chain params_id is self-describing.
  std::string id() const;
  static HashParams parse(std::string_view params_id);

  /// Throws Error(InvalidParams) if any field is zero or out of range.
  void validate() const;

  bool operator==(const HashParams&) const = default;
};

struct Commitment {
  Bytes hash;
  Salt salt;
  std::string params_id;

  bool operator==(const Commitment&) const = default;
};

/// Length-prefixed "payload + salt": u32 big-endian payload length, payload, salt.
Bytes canonical_encoding(ByteView payload, const Salt& salt);

/// Decimal UTF-8 rendering for numeric payloads: integral values print without
/// a fractional part, others use the shortest round-trip form.
std::string render_number(double value);

/// H = argon2(canonical_encoding(payload, salt)). The argon2 salt input is the
/// first 16 bytes of SHA-256("dcmb/commit/v1" || salt), which lifts argon2's
/// 8-byte minimum while keeping short salts such as "fjpd7" usable.
Commitment commit(ByteView payload, const Salt& salt, const HashParams& params);
Commitment commit(std::string_view payload, const Salt& salt, const HashParams& params);

/// Recomputes the digest for `candidate` and compares in constant time.
bool verify(const Commitment& commitment, ByteView candidate, const HashParams& params);
bool verify(const Commitment& commitment, std::string_view candidate, const HashParams& params);
/// Uses the parameters named by commitment.params_id.
bool verify(const Commitment& commitment, ByteView candidate);

}  // namespace dcmb
