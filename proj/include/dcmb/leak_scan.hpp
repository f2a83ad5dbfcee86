#pragma once

#include <optional>
#include <span>
#include <string>

#include "json.hpp"

#include "dcmb/bytes.hpp"

namespace dcmb {

/// Keys whose string values hold hex-encoded binary (digests, salts,
/// signatures). Their decoded bytes are searched instead of the hex text, so
/// digit patterns cannot match a digest's hex rendering by coincidence.
bool is_binary_field(std::string_view key);

/// Searches a transaction body for any registered plaintext pattern.
/// Text leaves are searched as-is, binary leaves after hex decoding, numbers
/// in their decimal rendering. `params_id` leaves are skipped since the
/// ledger only accepts canonical parameter ids there. Returns a description of the first hit.
std::optional<std::string> find_leak(const nlohmann::json& body, std::span<const Bytes> patterns);

}  // namespace dcmb
