#include "vaxledger/crypto.hpp"

#include <sodium.h>
#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <fstream>
#include <mutex>
#include <stdexcept>

namespace vaxledger::crypto {

void ensure_initialized() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
  });
}

PublicKey PublicKey::from_hex(std::string_view hex) {
  if (!codec::is_lower_hex(hex, 64)) throw codec::SchemaError("public key must be 64 lowercase hex characters");
  PublicKey pk;
  auto raw = codec::from_hex(hex);
  std::copy(raw.begin(), raw.end(), pk.bytes.begin());
  return pk;
}

SigningKey SigningKey::generate() {
  ensure_initialized();
  SigningKey k;
  crypto_sign_keypair(k.public_.bytes.data(), k.secret_.data());
  return k;
}

SigningKey SigningKey::from_seed(std::span<const std::uint8_t, 32> seed) {
  ensure_initialized();
  SigningKey k;
  crypto_sign_seed_keypair(k.public_.bytes.data(), k.secret_.data(), seed.data());
  return k;
}

SigningKey SigningKey::from_seed_hex(std::string_view hex) {
  if (!codec::is_lower_hex(hex, 64)) throw codec::SchemaError("key seed must be 64 lowercase hex characters");
  auto raw = codec::from_hex(hex);
  SigningKey k = from_seed(std::span<const std::uint8_t, 32>(raw.data(), 32));
  sodium_memzero(raw.data(), raw.size());
  return k;
}

SigningKey SigningKey::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open key file " + path.string());
  std::string hex;
  in >> hex;
  SigningKey k = from_seed_hex(hex);
  sodium_memzero(hex.data(), hex.size());
  return k;
}

void SigningKey::save(const std::filesystem::path& path) const {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, S_IRUSR | S_IWUSR);
  if (fd < 0) throw std::runtime_error("cannot write key file " + path.string());
  // libsodium stores the seed in the first half of the secret key.
  std::string line = codec::to_hex(std::span(secret_.data(), 32)) + "\n";
  bool ok = ::write(fd, line.data(), line.size()) == static_cast<ssize_t>(line.size());
  sodium_memzero(line.data(), line.size());
  ::close(fd);
  if (!ok) throw std::runtime_error("cannot write key file " + path.string());
}

SigningKey::SigningKey(const SigningKey& other) : secret_(other.secret_), public_(other.public_) {}

SigningKey& SigningKey::operator=(const SigningKey& other) {
  secret_ = other.secret_;
  public_ = other.public_;
  return *this;
}

SigningKey::~SigningKey() { sodium_memzero(secret_.data(), secret_.size()); }

Signature SigningKey::sign(std::string_view message) const {
  Signature sig;
  crypto_sign_detached(sig.data(), nullptr, reinterpret_cast<const unsigned char*>(message.data()), message.size(),
                       secret_.data());
  return sig;
}

bool verify(const PublicKey& key, std::string_view message, std::span<const std::uint8_t> signature) {
  ensure_initialized();
  if (signature.size() != crypto_sign_BYTES) return false;
  return crypto_sign_verify_detached(signature.data(), reinterpret_cast<const unsigned char*>(message.data()),
                                     message.size(), key.bytes.data()) == 0;
}

codec::Bytes random_bytes(std::size_t n) {
  ensure_initialized();
  codec::Bytes out(n);
  randombytes_buf(out.data(), n);
  return out;
}

}  // namespace vaxledger::crypto
