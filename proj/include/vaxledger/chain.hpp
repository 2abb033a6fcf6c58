#pragma once

#include "vaxledger/block.hpp"
#include "vaxledger/registry_state.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>

namespace vaxledger::ledger {

enum class ChainErrorCode { BadHeight, BrokenHashLink, BadTxRoot, BadStateRoot, BadSignature, MalformedBlock };

std::string_view to_string(ChainErrorCode c);

struct ChainError {
  ChainErrorCode code;
  std::uint64_t height;
  std::string detail;

  std::string describe() const;
};

// Validates blocks one at a time against the running head and replayed state.
// A rejected block leaves the validator where it was.
class ChainValidator {
 public:
  explicit ChainValidator(crypto::PublicKey producer_key);
  // Resumes after an already-validated prefix ending at `head`.
  ChainValidator(crypto::PublicKey producer_key, registry::RegistryState state, std::optional<BlockHeader> head);

  std::optional<ChainError> push(const Block& block);

  std::uint64_t next_height() const { return next_height_; }
  const registry::RegistryState& state() const { return state_; }
  const std::optional<BlockHeader>& head() const { return head_; }

 private:
  crypto::PublicKey producer_key_;
  registry::RegistryState state_;
  std::optional<BlockHeader> head_;
  std::uint64_t next_height_ = 0;
};

// Checks, per block in order: signature, height, hash link, tx root, replayed
// state root. Returns the first failure.
std::optional<ChainError> validate_chain(std::span<const Block> blocks, const crypto::PublicKey& producer_key);

}  // namespace vaxledger::ledger

namespace vaxledger::registry {

class ReplayFailed : public std::runtime_error {
 public:
  ReplayFailed(std::uint64_t height, std::size_t tx_index, TxErrorCode inner, const std::string& detail);
  std::uint64_t height() const { return height_; }
  std::size_t tx_index() const { return tx_index_; }
  TxErrorCode inner() const { return inner_; }

 private:
  std::uint64_t height_;
  std::size_t tx_index_;
  TxErrorCode inner_;
};

// Called before each transaction is applied, with the state it applies to.
using ReplayObserver =
    std::function<void(std::uint64_t height, std::size_t tx_index, const Transaction& tx, const RegistryState& before)>;

RegistryState replay(std::span<const ledger::Block> blocks, const ReplayObserver& observer = {});

// Applies one block's transactions to `state`; throws ReplayFailed and leaves
// `state` unchanged on failure.
void replay_block(RegistryState& state, const ledger::Block& block, const ReplayObserver& observer = {});

}  // namespace vaxledger::registry
