#pragma once

#include "vaxledger/auth.hpp"
#include "vaxledger/codec.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace vaxledger::node {

enum class Mode { Producer, Verifier };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeConfig {
  Mode mode = Mode::Producer;
  std::string listen_addr = "127.0.0.1:8080";
  std::filesystem::path data_dir;
  std::int64_t block_interval_s = 5;
  std::optional<std::string> peer_url;
  std::optional<std::filesystem::path> producer_key_path;
  std::optional<std::filesystem::path> credential_key_path;
  // Verifiers have no private keys; they are configured with the public halves.
  std::optional<std::string> producer_pubkey;
  std::optional<std::string> credential_pubkey;
  std::string producer_id = "authority-node";
  std::int64_t validity_window_days = 365;
  int login_attempts_per_minute = 10;
  std::optional<auth::KdfParams> kdf;

  // Throws ConfigError when the mode invariants do not hold.
  void validate() const;

  codec::Value to_value() const;
  // Relative paths are resolved against `base_dir`.
  static NodeConfig from_value(const codec::Value& v, const std::filesystem::path& base_dir = {});
  static NodeConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::filesystem::path chain_file() const { return data_dir / "chain.jsonl"; }
  std::filesystem::path accounts_file() const { return data_dir / "accounts.jsonl"; }
};

std::pair<std::string, int> split_host_port(std::string_view addr);

}  // namespace vaxledger::node
