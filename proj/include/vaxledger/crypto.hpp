#pragma once

#include "vaxledger/codec.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace vaxledger::crypto {

void ensure_initialized();

using Signature = std::array<std::uint8_t, 64>;

struct PublicKey {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const { return codec::to_hex(bytes); }
  static PublicKey from_hex(std::string_view hex);

  friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

// Ed25519 signing key held as its 32-byte seed. The expanded secret is wiped
// on destruction.
class SigningKey {
 public:
  static SigningKey generate();
  static SigningKey from_seed(std::span<const std::uint8_t, 32> seed);
  static SigningKey from_seed_hex(std::string_view hex);

  // Key files contain the seed as 64 lowercase hex characters.
  static SigningKey load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  SigningKey(const SigningKey&);
  SigningKey& operator=(const SigningKey&);
  ~SigningKey();

  const PublicKey& public_key() const { return public_; }
  Signature sign(std::string_view message) const;

 private:
  SigningKey() = default;

  std::array<std::uint8_t, 64> secret_{};
  PublicKey public_;
};

bool verify(const PublicKey& key, std::string_view message, std::span<const std::uint8_t> signature);

codec::Bytes random_bytes(std::size_t n);

}  // namespace vaxledger::crypto
