#include "vaxledger/chain.hpp"

namespace vaxledger::ledger {

std::string_view to_string(ChainErrorCode c) {
  switch (c) {
    case ChainErrorCode::BadHeight: return "BadHeight";
    case ChainErrorCode::BrokenHashLink: return "BrokenHashLink";
    case ChainErrorCode::BadTxRoot: return "BadTxRoot";
    case ChainErrorCode::BadStateRoot: return "BadStateRoot";
    case ChainErrorCode::BadSignature: return "BadSignature";
    case ChainErrorCode::MalformedBlock: return "MalformedBlock";
  }
  return "Unknown";
}

std::string ChainError::describe() const {
  std::string out = std::string(to_string(code)) + "(" + std::to_string(height) + ")";
  if (!detail.empty()) out += ": " + detail;
  return out;
}

ChainValidator::ChainValidator(crypto::PublicKey producer_key) : producer_key_(producer_key) {}

ChainValidator::ChainValidator(crypto::PublicKey producer_key, registry::RegistryState state,
                               std::optional<BlockHeader> head)
    : producer_key_(producer_key),
      state_(std::move(state)),
      head_(std::move(head)),
      next_height_(head_ ? head_->height + 1 : 0) {}

std::optional<ChainError> ChainValidator::push(const Block& block) {
  const BlockHeader& h = block.header;
  const std::uint64_t at = next_height_;

  if (!crypto::verify(producer_key_, h.signing_bytes(), h.signature)) {
    return ChainError{ChainErrorCode::BadSignature, at, "header signature does not verify"};
  }
  if (h.height != at) {
    return ChainError{ChainErrorCode::BadHeight, h.height,
                      "expected height " + std::to_string(at) + ", block claims " + std::to_string(h.height)};
  }
  const Digest32 expected_prev = head_ ? block_id(*head_) : Digest32::zero();
  if (h.prev_hash != expected_prev) {
    return ChainError{ChainErrorCode::BrokenHashLink, at, "prev_hash does not match predecessor block_id"};
  }
  if (h.tx_root != tx_root(block.transactions)) {
    return ChainError{ChainErrorCode::BadTxRoot, at, "tx_root does not match transactions"};
  }

  registry::RegistryState next = state_;
  try {
    registry::replay_block(next, block);
  } catch (const registry::ReplayFailed& e) {
    return ChainError{ChainErrorCode::BadStateRoot, at, e.what()};
  }
  if (h.state_root != registry::state_root(next)) {
    return ChainError{ChainErrorCode::BadStateRoot, at, "state_root does not match replayed state"};
  }

  state_ = std::move(next);
  head_ = h;
  ++next_height_;
  return std::nullopt;
}

std::optional<ChainError> validate_chain(std::span<const Block> blocks, const crypto::PublicKey& producer_key) {
  ChainValidator v(producer_key);
  for (const auto& b : blocks) {
    if (auto err = v.push(b)) return err;
  }
  return std::nullopt;
}

}  // namespace vaxledger::ledger

namespace vaxledger::registry {

ReplayFailed::ReplayFailed(std::uint64_t height, std::size_t tx_index, TxErrorCode inner, const std::string& detail)
    : std::runtime_error("replay failed at height " + std::to_string(height) + ", tx " + std::to_string(tx_index) +
                         ": " + detail),
      height_(height),
      tx_index_(tx_index),
      inner_(inner) {}

void replay_block(RegistryState& state, const ledger::Block& block, const ReplayObserver& observer) {
  RegistryState next = state;
  for (std::size_t i = 0; i < block.transactions.size(); ++i) {
    const auto& tx = block.transactions[i];
    if (observer) observer(block.header.height, i, tx, next);
    try {
      apply_tx_in_place(next, tx);
    } catch (const TxError& e) {
      throw ReplayFailed(block.header.height, i, e.code(), e.what());
    }
  }
  state = std::move(next);
}

RegistryState replay(std::span<const ledger::Block> blocks, const ReplayObserver& observer) {
  RegistryState state;
  for (const auto& b : blocks) replay_block(state, b, observer);
  return state;
}

}  // namespace vaxledger::registry
