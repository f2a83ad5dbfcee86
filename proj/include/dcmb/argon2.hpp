#pragma once

#include <cstdint>
#include <string_view>

#include "dcmb/bytes.hpp"

namespace dcmb {

/// Argon2 version 0x13. Numeric values are the type codes hashed into H0.
enum class Argon2Variant : std::uint32_t { d = 0, i = 1, id = 2 };

std::string_view to_string(Argon2Variant v);
Argon2Variant argon2_variant_from_string(std::string_view name);

struct Argon2Config {
  Argon2Variant variant = Argon2Variant::id;
  std::uint32_t memory_kib = 8192;
  std::uint32_t iterations = 1;
  std::uint32_t lanes = 1;
  std::uint32_t tag_len = 32;
};

/// Argon2 (RFC 9106), lanes filled sequentially per slice.
/// Throws Error(InvalidParams) for out-of-range parameters: salt shorter than
/// 8 bytes, tag shorter than 16 bytes, memory below 8 * lanes KiB.
Bytes argon2_hash(const Argon2Config& config, ByteView password, ByteView salt, ByteView secret = {},
                  ByteView associated_data = {});

}  // namespace dcmb
