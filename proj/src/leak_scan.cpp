#include "dcmb/leak_scan.hpp"

#include <array>

#include "dcmb/commitment.hpp"

namespace dcmb {

bool is_binary_field(std::string_view key) {
  static constexpr std::array<std::string_view, 8> kExact{"hash",       "salt",      "signature", "value",
                                                           "public_key", "trigger_tx", "digest",    "stored_hash"};
  for (auto k : kExact)
    if (key == k) return true;
  return key.ends_with("_digest") || key.ends_with("_hash");
}

namespace {

std::optional<std::string> scan(const nlohmann::json& node, std::string_view key, std::span<const Bytes> patterns,
                                const std::string& path) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) {
      if (auto hit = scan(v, k, patterns, path + "/" + k)) return hit;
    }
    return std::nullopt;
  }
  if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      if (auto hit = scan(node[i], key, patterns, path + "/" + std::to_string(i))) return hit;
    }
    return std::nullopt;
  }
  if (key == "params_id") return std::nullopt;  // validated against the canonical grammar on submit
  Bytes haystack;
  if (node.is_string()) {
    const auto& s = node.get_ref<const std::string&>();
    haystack = (is_binary_field(key) && is_lower_hex(s)) ? from_hex(s) : to_bytes(s);
  } else if (node.is_number()) {
    haystack = to_bytes(render_number(node.get<double>()));
  } else {
    return std::nullopt;
  }
  for (const auto& p : patterns) {
    if (contains(haystack, p)) return "plaintext found at " + (path.empty() ? std::string("/") : path);
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> find_leak(const nlohmann::json& body, std::span<const Bytes> patterns) {
  if (patterns.empty()) return std::nullopt;
  return scan(body, {}, patterns, {});
}

}  // namespace dcmb
