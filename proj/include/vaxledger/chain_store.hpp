#pragma once

#include "vaxledger/block.hpp"
#include "vaxledger/chain.hpp"

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace vaxledger::ledger {

// Result of parsing JSON-lines chain bytes. Line N must hold the canonical
// encoding of the block at height N.
struct ParsedChain {
  std::vector<Block> blocks;
  std::size_t valid_bytes = 0;  // prefix length covering `blocks`
  std::optional<ChainError> error;
  bool torn_tail = false;  // error confined to an unterminated or unparsable last line
};

ParsedChain parse_chain_bytes(std::string_view bytes);

// Strict: parse then validate; any parse error is MalformedBlock(line).
std::optional<ChainError> validate_chain_bytes(std::string_view bytes, const crypto::PublicKey& producer_key);

class PersistFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptChainFile : public std::runtime_error {
 public:
  explicit CorruptChainFile(ChainError e) : std::runtime_error(e.describe()), error_(std::move(e)) {}
  const ChainError& error() const { return error_; }

 private:
  ChainError error_;
};

// Append-only block file. Each append writes one line and fsyncs.
class ChainStore {
 public:
  explicit ChainStore(std::filesystem::path path);

  // Reads every block. A torn trailing line is truncated from the file and
  // logged; corruption anywhere else throws CorruptChainFile.
  std::vector<Block> load_and_recover();

  void append(const Block& block);  // throws PersistFailure
  void append_all(std::span<const Block> blocks);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace vaxledger::ledger
