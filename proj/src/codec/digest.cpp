#include "vaxledger/codec.hpp"
#include "vaxledger/crypto.hpp"

#include <sodium.h>

namespace vaxledger::codec {

Digest32 hash_sha256(std::span<const std::uint8_t> data) {
  crypto::ensure_initialized();
  Digest32 d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

Digest32 hash_sha256(std::string_view data) {
  return hash_sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string Digest32::hex() const { return to_hex(bytes); }

Digest32 Digest32::from_hex(std::string_view hex) {
  if (!is_lower_hex(hex, 64)) throw SchemaError("digest must be 64 lowercase hex characters");
  Digest32 d;
  Bytes raw = codec::from_hex(hex);
  std::copy(raw.begin(), raw.end(), d.bytes.begin());
  return d;
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

bool is_lower_hex(std::string_view s, std::size_t expected_len) {
  if (s.size() != expected_len) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0 || !is_lower_hex(hex, hex.size())) throw SchemaError("expected lowercase hex");
  auto nibble = [](char c) -> std::uint8_t { return c <= '9' ? c - '0' : c - 'a' + 10; };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return out;
}

std::string base64url_encode(std::span<const std::uint8_t> data) {
  crypto::ensure_initialized();
  constexpr int variant = sodium_base64_VARIANT_URLSAFE_NO_PADDING;
  std::string out(sodium_base64_encoded_len(data.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), data.data(), data.size(), variant);
  out.resize(out.size() - 1);  // drop the terminating NUL
  return out;
}

std::optional<Bytes> base64url_decode(std::string_view text) {
  crypto::ensure_initialized();
  Bytes out(text.size() * 3 / 4 + 1);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, &end,
                        sodium_base64_VARIANT_URLSAFE_NO_PADDING) != 0) {
    return std::nullopt;
  }
  if (end != text.data() + text.size()) return std::nullopt;
  out.resize(len);
  return out;
}

}  // namespace vaxledger::codec
