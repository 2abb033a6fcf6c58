#pragma once

#include "vaxledger/block.hpp"
#include "vaxledger/chain.hpp"
#include "vaxledger/crypto.hpp"
#include "vaxledger/registry_state.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace vaxledger::testing {

crypto::SigningKey key_from_label(std::string_view label);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Builds honest chains by hand: transactions are authored here, applied with
// registry::apply_tx, and sealed with ledger::append_block.
class ChainFixture {
 public:
  static constexpr std::int64_t kStartTime = 1'700'000'000;
  static constexpr const char* kAuthority = "authority";

  ChainFixture();

  registry::Transaction register_provider(const std::string& provider_id, const std::string& hospital);
  registry::Transaction register_officer(const std::string& officer_id);
  registry::Transaction issue(const std::string& provider_id, const std::string& aadhaar, const std::string& name,
                              const std::string& vaccine, std::int64_t dose, const std::string& date);

  // Applies and seals `txs` as the next block.
  const ledger::Block& commit(std::vector<registry::Transaction> txs);

  // Grows the chain to `total_blocks` blocks of `txs_per_block` issuances from
  // a fixed cast of providers.
  void grow_random(std::size_t total_blocks, std::size_t txs_per_block, std::uint32_t seed);

  std::string chain_bytes() const;

  ledger::BlockSigner signer;
  crypto::SigningKey credential_key;
  codec::Bytes salt;
  std::vector<ledger::Block> blocks;
  registry::RegistryState state;
  std::int64_t clock = kStartTime;

 private:
  std::int64_t next_nonce(const std::string& actor);
  std::map<std::string, std::int64_t> nonces_;
};

}  // namespace vaxledger::testing
