#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcmb {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// 256-bit digest used for chain links, tx ids and blob digests.
using Digest = std::array<std::uint8_t, 32>;

Bytes to_bytes(std::string_view text);
std::string to_string(ByteView bytes);

/// Lowercase hex, the only rendering used in logs and ledger files.
std::string to_hex(ByteView bytes);

/// Strict decoder: lowercase only, even length. Throws Error(ParseError).
Bytes from_hex(std::string_view hex);
Digest digest_from_hex(std::string_view hex);

bool is_lower_hex(std::string_view text);

/// Constant-time equality; sizes are compared first (sizes are public).
bool constant_time_equal(ByteView a, ByteView b);

void append_u32_be(Bytes& out, std::uint32_t v);
void append_u32_le(Bytes& out, std::uint32_t v);
void append(Bytes& out, ByteView data);

/// Searches `haystack` for `needle` as a contiguous byte run.
bool contains(ByteView haystack, ByteView needle);

}  // namespace dcmb
