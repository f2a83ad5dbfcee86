#include "dcmb/commitment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dcmb/errors.hpp"

namespace dcmb {

Salt generate_salt(RandomSource& rng, std::size_t length) {
  Salt salt{Bytes(length)};
  rng.fill(salt.bytes);
  return salt;
}

HashParams HashParams::production() { return HashParams{Argon2Variant::id, 65536, 3, 1, 32}; }

HashParams HashParams::test() { return HashParams{Argon2Variant::id, 8192, 1, 1, 32}; }

std::string HashParams::id() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s:m=%u,t=%u,p=%u,len=%u", std::string(to_string(variant)).c_str(), memory_kib,
                iterations, parallelism, digest_len);
  return buf;
}

HashParams HashParams::parse(std::string_view params_id) {
  const auto colon = params_id.find(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::InvalidParams, "malformed params_id");
  HashParams p;
  p.variant = argon2_variant_from_string(params_id.substr(0, colon));
  unsigned m = 0, t = 0, par = 0, len = 0;
  const std::string rest(params_id.substr(colon + 1));
  int consumed = 0;
  if (std::sscanf(rest.c_str(), "m=%u,t=%u,p=%u,len=%u%n", &m, &t, &par, &len, &consumed) != 4 ||
      static_cast<std::size_t>(consumed) != rest.size())
    throw Error(ErrorCode::InvalidParams, "malformed params_id '" + std::string(params_id) + "'");
  p.memory_kib = m;
  p.iterations = t;
  p.parallelism = par;
  p.digest_len = len;
  if (p.id() != params_id) throw Error(ErrorCode::InvalidParams, "non-canonical params_id");
  return p;
}

void HashParams::validate() const {
  if (memory_kib == 0 || iterations == 0 || parallelism == 0 || digest_len == 0)
    throw Error(ErrorCode::InvalidParams, "hash parameters must be strictly positive");
  if (digest_len < 16) throw Error(ErrorCode::InvalidParams, "digest length must be at least 16 bytes");
  if (memory_kib < 8 * parallelism) throw Error(ErrorCode::InvalidParams, "memory must be at least 8 KiB per lane");
}

Bytes canonical_encoding(ByteView payload, const Salt& salt) {
  Bytes out;
  out.reserve(4 + payload.size() + salt.bytes.size());
  append_u32_be(out, static_cast<std::uint32_t>(payload.size()));
  append(out, payload);
  append(out, salt.bytes);
  return out;
}

std::string render_number(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidParams, "value must be finite");
  if (value == std::trunc(value) && std::fabs(value) < 9.007199254740992e15) {
    return std::to_string(static_cast<long long>(value));
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

Bytes argon2_salt_for(const Salt& salt) {
  Bytes material = to_bytes("dcmb/commit/v1");
  append(material, salt.bytes);
  const Digest d = sha256(material);
  return Bytes(d.begin(), d.begin() + 16);
}

}  // namespace

Commitment commit(ByteView payload, const Salt& salt, const HashParams& params) {
  params.validate();
  if (payload.empty()) throw Error(ErrorCode::EmptyPayload, "payload is empty");
  if (salt.bytes.empty()) throw Error(ErrorCode::InvalidParams, "salt is empty");
  const Argon2Config cfg{params.variant, params.memory_kib, params.iterations, params.parallelism,
                         params.digest_len};
  return Commitment{argon2_hash(cfg, canonical_encoding(payload, salt), argon2_salt_for(salt)), salt, params.id()};
}

Commitment commit(std::string_view payload, const Salt& salt, const HashParams& params) {
  return commit(ByteView(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()), salt, params);
}

bool verify(const Commitment& commitment, ByteView candidate, const HashParams& params) {
  if (candidate.empty() || commitment.salt.bytes.empty()) return false;
  if (commitment.params_id != params.id()) return false;
  const Commitment recomputed = commit(candidate, commitment.salt, params);
  return constant_time_equal(recomputed.hash, commitment.hash);
}

bool verify(const Commitment& commitment, std::string_view candidate, const HashParams& params) {
  return verify(commitment, ByteView(reinterpret_cast<const std::uint8_t*>(candidate.data()), candidate.size()),
                params);
}

bool verify(const Commitment& commitment, ByteView candidate) {
  return verify(commitment, candidate, HashParams::parse(commitment.params_id));
}

}  // namespace dcmb
