#include "dcmb/bytes.hpp"

#include <algorithm>

#include <sodium.h>

#include "dcmb/errors.hpp"

namespace dcmb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::EmptyPayload: return "EmptyPayload";
    case ErrorCode::UnknownSender: return "UnknownSender";
    case ErrorCode::MalformedTransaction: return "MalformedTransaction";
    case ErrorCode::LeakRejected: return "LeakRejected";
    case ErrorCode::DuplicateContract: return "DuplicateContract";
    case ErrorCode::EmptyConditionTable: return "EmptyConditionTable";
    case ErrorCode::DuplicateCondition: return "DuplicateCondition";
    case ErrorCode::UnsupportedPredicate: return "UnsupportedPredicate";
    case ErrorCode::NotCertified: return "NotCertified";
    case ErrorCode::SigningKeyUnavailable: return "SigningKeyUnavailable";
    case ErrorCode::UnknownChannel: return "UnknownChannel";
    case ErrorCode::DuplicateMessage: return "DuplicateMessage";
    case ErrorCode::DatasetMissing: return "DatasetMissing";
    case ErrorCode::DuplicateVote: return "DuplicateVote";
    case ErrorCode::UnknownValidator: return "UnknownValidator";
    case ErrorCode::VotingOpen: return "VotingOpen";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::GateDenied: return "GateDenied";
    case ErrorCode::ChainInvalid: return "ChainInvalid";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::UnsupportedPredicate:
    case ErrorCode::InvalidParams:
    case ErrorCode::DatasetMissing:
    case ErrorCode::EmptyConditionTable:
    case ErrorCode::DuplicateCondition:
      return ErrorCategory::Config;
    case ErrorCode::ChainInvalid:
    case ErrorCode::MalformedTransaction:
    case ErrorCode::ParseError:
      return ErrorCategory::Verification;
    case ErrorCode::IoError:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Protocol;
  }
}

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::string to_string(ByteView bytes) { return std::string(bytes.begin(), bytes.end()); }

std::string to_hex(ByteView bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(bytes.size() * 2, '\0');
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    out[2 * i] = kHex[bytes[i] >> 4];
    out[2 * i + 1] = kHex[bytes[i] & 0x0f];
  }
  return out;
}

namespace {

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

bool is_lower_hex(std::string_view text) {
  return text.size() % 2 == 0 &&
         std::all_of(text.begin(), text.end(), [](char c) { return nibble(c) >= 0; });
}

Bytes from_hex(std::string_view hex) {
  if (!is_lower_hex(hex)) throw Error(ErrorCode::ParseError, "not lowercase hex: '" + std::string(hex) + "'");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

Digest digest_from_hex(std::string_view hex) {
  const Bytes raw = from_hex(hex);
  if (raw.size() != Digest{}.size()) throw Error(ErrorCode::ParseError, "digest must be 32 bytes");
  Digest d{};
  std::copy(raw.begin(), raw.end(), d.begin());
  return d;
}

bool constant_time_equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  if (a.empty()) return true;
  return sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

void append_u32_be(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void append_u32_le(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append(Bytes& out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

bool contains(ByteView haystack, ByteView needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

}  // namespace dcmb
