#include "dcmb/argon2.hpp"

#include <algorithm>
#include <array>
#include <cstring>

#include <sodium.h>

#include "dcmb/crypto.hpp"
#include "dcmb/errors.hpp"

namespace dcmb {

std::string_view to_string(Argon2Variant v) {
  switch (v) {
    case Argon2Variant::d: return "argon2d";
    case Argon2Variant::i: return "argon2i";
    case Argon2Variant::id: return "argon2id";
  }
  return "argon2?";
}

Argon2Variant argon2_variant_from_string(std::string_view name) {
  if (name == "argon2d") return Argon2Variant::d;
  if (name == "argon2i") return Argon2Variant::i;
  if (name == "argon2id") return Argon2Variant::id;
  throw Error(ErrorCode::InvalidParams, "unknown hash variant '" + std::string(name) + "'");
}

namespace {

constexpr std::uint32_t kVersion = 0x13;
constexpr std::uint32_t kSyncPoints = 4;
constexpr std::size_t kBlockWords = 128;
constexpr std::size_t kBlockBytes = kBlockWords * 8;
constexpr std::size_t kAddressesInBlock = kBlockWords;

struct Block {
  std::array<std::uint64_t, kBlockWords> v{};
};

inline std::uint64_t rotr(std::uint64_t x, unsigned n) { return (x >> n) | (x << (64 - n)); }

inline std::uint64_t blamka(std::uint64_t x, std::uint64_t y) {
  const std::uint64_t m = 0xffffffffULL;
  return x + y + 2 * ((x & m) * (y & m));
}

inline void gb(std::uint64_t& a, std::uint64_t& b, std::uint64_t& c, std::uint64_t& d) {
  a = blamka(a, b);
  d = rotr(d ^ a, 32);
  c = blamka(c, d);
  b = rotr(b ^ c, 24);
  a = blamka(a, b);
  d = rotr(d ^ a, 16);
  c = blamka(c, d);
  b = rotr(b ^ c, 63);
}

// BLAKE2b round without message words over 16 registers given by index.
inline void permute(std::uint64_t* w, const std::array<std::size_t, 16>& ix) {
  gb(w[ix[0]], w[ix[4]], w[ix[8]], w[ix[12]]);
  gb(w[ix[1]], w[ix[5]], w[ix[9]], w[ix[13]]);
  gb(w[ix[2]], w[ix[6]], w[ix[10]], w[ix[14]]);
  gb(w[ix[3]], w[ix[7]], w[ix[11]], w[ix[15]]);
  gb(w[ix[0]], w[ix[5]], w[ix[10]], w[ix[15]]);
  gb(w[ix[1]], w[ix[6]], w[ix[11]], w[ix[12]]);
  gb(w[ix[2]], w[ix[7]], w[ix[8]], w[ix[13]]);
  gb(w[ix[3]], w[ix[4]], w[ix[9]], w[ix[14]]);
}

struct PermutationIndices {
  std::array<std::array<std::size_t, 16>, 8> rows{};
  std::array<std::array<std::size_t, 16>, 8> cols{};

  PermutationIndices() {
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 16; ++j) rows[i][j] = 16 * i + j;
      for (std::size_t j = 0; j < 8; ++j) {
        cols[i][2 * j] = 2 * i + 16 * j;
        cols[i][2 * j + 1] = 2 * i + 16 * j + 1;
      }
    }
  }
};

const PermutationIndices& indices() {
  static const PermutationIndices ix;
  return ix;
}

// next = P(prev ^ ref) ^ (prev ^ ref) [^ next when xor_into]
void fill_block(const Block& prev, const Block& ref, Block& next, bool xor_into) {
  Block r;
  Block tmp;
  for (std::size_t i = 0; i < kBlockWords; ++i) {
    r.v[i] = prev.v[i] ^ ref.v[i];
    tmp.v[i] = xor_into ? r.v[i] ^ next.v[i] : r.v[i];
  }
  const auto& ix = indices();
  for (const auto& row : ix.rows) permute(r.v.data(), row);
  for (const auto& col : ix.cols) permute(r.v.data(), col);
  for (std::size_t i = 0; i < kBlockWords; ++i) next.v[i] = tmp.v[i] ^ r.v[i];
}

void blake2b(std::uint8_t* out, std::size_t out_len, ByteView a, ByteView b = {}) {
  crypto_generichash_blake2b_state st;
  crypto_generichash_blake2b_init(&st, nullptr, 0, out_len);
  crypto_generichash_blake2b_update(&st, a.data(), a.size());
  if (!b.empty()) crypto_generichash_blake2b_update(&st, b.data(), b.size());
  crypto_generichash_blake2b_final(&st, out, out_len);
}

// Variable-length hash H' built from BLAKE2b.
Bytes hash_prime(std::uint32_t out_len, ByteView input) {
  Bytes out(out_len);
  Bytes prefix;
  append_u32_le(prefix, out_len);
  if (out_len <= 64) {
    blake2b(out.data(), out_len, prefix, input);
    return out;
  }
  const std::uint32_t r = (out_len + 31) / 32 - 2;
  std::array<std::uint8_t, 64> v{};
  blake2b(v.data(), 64, prefix, input);
  std::memcpy(out.data(), v.data(), 32);
  for (std::uint32_t i = 1; i < r; ++i) {
    std::array<std::uint8_t, 64> next{};
    blake2b(next.data(), 64, v);
    v = next;
    std::memcpy(out.data() + 32 * i, v.data(), 32);
  }
  blake2b(out.data() + 32 * r, out_len - 32 * r, v);
  return out;
}

void load_block(Block& dst, const std::uint8_t* src) {
  for (std::size_t i = 0; i < kBlockWords; ++i) {
    std::uint64_t w = 0;
    for (int b = 7; b >= 0; --b) w = w << 8 | src[8 * i + b];
    dst.v[i] = w;
  }
}

void store_block(std::uint8_t* dst, const Block& src) {
  for (std::size_t i = 0; i < kBlockWords; ++i)
    for (int b = 0; b < 8; ++b) dst[8 * i + b] = static_cast<std::uint8_t>(src.v[i] >> (8 * b));
}

class Instance {
 public:
  Instance(const Argon2Config& cfg, std::uint32_t lanes, std::uint32_t memory_blocks)
      : cfg_(cfg),
        lanes_(lanes),
        memory_blocks_(memory_blocks),
        lane_length_(memory_blocks / lanes),
        segment_length_(lane_length_ / kSyncPoints),
        memory_(memory_blocks) {}

  void initialize(const std::array<std::uint8_t, 64>& h0) {
    Bytes seed(h0.begin(), h0.end());
    seed.resize(72);
    for (std::uint32_t lane = 0; lane < lanes_; ++lane) {
      for (std::uint32_t col = 0; col < 2; ++col) {
        for (int i = 0; i < 4; ++i) {
          seed[64 + i] = static_cast<std::uint8_t>(col >> (8 * i));
          seed[68 + i] = static_cast<std::uint8_t>(lane >> (8 * i));
        }
        const Bytes blk = hash_prime(kBlockBytes, seed);
        load_block(memory_[lane * lane_length_ + col], blk.data());
      }
    }
  }

  void fill() {
    for (std::uint32_t pass = 0; pass < cfg_.iterations; ++pass)
      for (std::uint32_t slice = 0; slice < kSyncPoints; ++slice)
        for (std::uint32_t lane = 0; lane < lanes_; ++lane) fill_segment(pass, lane, slice);
  }

  Bytes finalize() const {
    Block acc = memory_[lane_length_ - 1];
    for (std::uint32_t lane = 1; lane < lanes_; ++lane) {
      const Block& last = memory_[lane * lane_length_ + lane_length_ - 1];
      for (std::size_t i = 0; i < kBlockWords; ++i) acc.v[i] ^= last.v[i];
    }
    std::array<std::uint8_t, kBlockBytes> raw{};
    store_block(raw.data(), acc);
    return hash_prime(cfg_.tag_len, raw);
  }

 private:
  std::uint32_t reference_index(std::uint32_t pass, std::uint32_t slice, std::uint32_t index,
                                std::uint32_t pseudo_rand, bool same_lane) const {
    std::uint32_t area;
    if (pass == 0) {
      if (slice == 0) {
        area = index - 1;
      } else if (same_lane) {
        area = slice * segment_length_ + index - 1;
      } else {
        area = slice * segment_length_ + (index == 0 ? -1 : 0);
      }
    } else if (same_lane) {
      area = lane_length_ - segment_length_ + index - 1;
    } else {
      area = lane_length_ - segment_length_ + (index == 0 ? -1 : 0);
    }
    std::uint64_t rel = pseudo_rand;
    rel = rel * rel >> 32;
    rel = area - 1 - (static_cast<std::uint64_t>(area) * rel >> 32);
    std::uint32_t start = 0;
    if (pass != 0) start = (slice == kSyncPoints - 1) ? 0 : (slice + 1) * segment_length_;
    return static_cast<std::uint32_t>((start + rel) % lane_length_);
  }

  void fill_segment(std::uint32_t pass, std::uint32_t lane, std::uint32_t slice) {
    const bool data_independent =
        cfg_.variant == Argon2Variant::i ||
        (cfg_.variant == Argon2Variant::id && pass == 0 && slice < kSyncPoints / 2);

    Block address, input, zero;
    auto next_addresses = [&] {
      ++input.v[6];
      fill_block(zero, input, address, false);
      fill_block(zero, address, address, false);
    };

    if (data_independent) {
      input.v[0] = pass;
      input.v[1] = lane;
      input.v[2] = slice;
      input.v[3] = memory_blocks_;
      input.v[4] = cfg_.iterations;
      input.v[5] = static_cast<std::uint64_t>(cfg_.variant);
    }

    std::uint32_t start = 0;
    if (pass == 0 && slice == 0) {
      start = 2;
      if (data_independent) next_addresses();
    }

    std::size_t curr = static_cast<std::size_t>(lane) * lane_length_ + slice * segment_length_ + start;
    std::size_t prev = (curr % lane_length_ == 0) ? curr + lane_length_ - 1 : curr - 1;

    for (std::uint32_t i = start; i < segment_length_; ++i, ++curr, ++prev) {
      if (curr % lane_length_ == 1) prev = curr - 1;
      std::uint64_t pseudo_rand;
      if (data_independent) {
        if (i % kAddressesInBlock == 0) next_addresses();
        pseudo_rand = address.v[i % kAddressesInBlock];
      } else {
        pseudo_rand = memory_[prev].v[0];
      }
      std::uint32_t ref_lane = static_cast<std::uint32_t>((pseudo_rand >> 32) % lanes_);
      if (pass == 0 && slice == 0) ref_lane = lane;
      const std::uint32_t ref_index =
          reference_index(pass, slice, i, static_cast<std::uint32_t>(pseudo_rand), ref_lane == lane);
      const Block& ref = memory_[static_cast<std::size_t>(ref_lane) * lane_length_ + ref_index];
      fill_block(memory_[prev], ref, memory_[curr], pass != 0);
    }
  }

  Argon2Config cfg_;
  std::uint32_t lanes_;
  std::uint32_t memory_blocks_;
  std::uint32_t lane_length_;
  std::uint32_t segment_length_;
  std::vector<Block> memory_;
};

}  // namespace

Bytes argon2_hash(const Argon2Config& config, ByteView password, ByteView salt, ByteView secret,
                  ByteView associated_data) {
  ensure_crypto_initialized();
  if (config.lanes == 0 || config.lanes > 0xffffff)
    throw Error(ErrorCode::InvalidParams, "parallelism must be in [1, 2^24)");
  if (config.iterations == 0) throw Error(ErrorCode::InvalidParams, "iterations must be positive");
  if (config.tag_len < 16) throw Error(ErrorCode::InvalidParams, "digest length must be at least 16 bytes");
  if (config.memory_kib < 8 * config.lanes)
    throw Error(ErrorCode::InvalidParams, "memory must be at least 8 KiB per lane");
  if (salt.size() < 8) throw Error(ErrorCode::InvalidParams, "argon2 salt must be at least 8 bytes");

  const std::uint32_t segment_blocks = config.memory_kib / (kSyncPoints * config.lanes);
  const std::uint32_t memory_blocks = segment_blocks * kSyncPoints * config.lanes;

  Bytes h0_input;
  for (std::uint32_t v : {config.lanes, config.tag_len, config.memory_kib, config.iterations, kVersion,
                          static_cast<std::uint32_t>(config.variant)})
    append_u32_le(h0_input, v);
  for (ByteView part : {password, salt, secret, associated_data}) {
    append_u32_le(h0_input, static_cast<std::uint32_t>(part.size()));
    append(h0_input, part);
  }
  std::array<std::uint8_t, 64> h0{};
  blake2b(h0.data(), h0.size(), h0_input);

  Instance inst(config, config.lanes, memory_blocks);
  inst.initialize(h0);
  inst.fill();
  sodium_memzero(h0.data(), h0.size());
  return inst.finalize();
}

}  // namespace dcmb
