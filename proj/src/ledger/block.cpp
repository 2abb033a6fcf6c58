#include "vaxledger/block.hpp"

#include "vaxledger/merkle.hpp"
#include "vaxledger/registry_state.hpp"

namespace vaxledger::ledger {

namespace {

codec::Map header_fields(const BlockHeader& h) {
  return codec::Map{
      {"height", static_cast<std::int64_t>(h.height)},
      {"prev_hash", h.prev_hash.hex()},
      {"producer_id", h.producer_id},
      {"state_root", h.state_root.hex()},
      {"timestamp", h.timestamp},
      {"tx_root", h.tx_root.hex()},
  };
}

void sign_header(BlockHeader& h, const BlockSigner& signer) { h.signature = signer.key.sign(h.signing_bytes()); }

}  // namespace

codec::Value BlockHeader::to_value() const {
  auto m = header_fields(*this);
  m.emplace("signature", codec::to_hex(signature));
  return m;
}

std::string BlockHeader::signing_bytes() const { return codec::encode_canonical(header_fields(*this)); }

BlockHeader BlockHeader::from_value(const codec::Value& v) {
  const auto& m = v.as_map();
  codec::expect_keys(m, {"height", "prev_hash", "producer_id", "signature", "state_root", "timestamp", "tx_root"});
  BlockHeader h;
  auto height = codec::field(m, "height").as_int();
  if (height < 0) throw codec::SchemaError("height must be non-negative");
  h.height = static_cast<std::uint64_t>(height);
  h.prev_hash = Digest32::from_hex(codec::field(m, "prev_hash").as_text());
  h.tx_root = Digest32::from_hex(codec::field(m, "tx_root").as_text());
  h.state_root = Digest32::from_hex(codec::field(m, "state_root").as_text());
  h.timestamp = codec::field(m, "timestamp").as_int();
  h.producer_id = codec::field(m, "producer_id").as_text();
  const auto& sig = codec::field(m, "signature").as_text();
  if (!codec::is_lower_hex(sig, 128)) throw codec::SchemaError("signature must be 128 lowercase hex characters");
  auto raw = codec::from_hex(sig);
  std::copy(raw.begin(), raw.end(), h.signature.begin());
  return h;
}

Digest32 block_id(const BlockHeader& header) { return codec::hash_sha256(codec::encode_canonical(header.to_value())); }

codec::Value Block::to_value() const {
  codec::List txs;
  txs.reserve(transactions.size());
  for (const auto& tx : transactions) txs.push_back(tx.to_value());
  return codec::Map{{"header", header.to_value()}, {"transactions", std::move(txs)}};
}

Block Block::from_value(const codec::Value& v) {
  const auto& m = v.as_map();
  codec::expect_keys(m, {"header", "transactions"});
  Block b;
  b.header = BlockHeader::from_value(codec::field(m, "header"));
  for (const auto& tx : codec::field(m, "transactions").as_list()) b.transactions.push_back(Transaction::from_value(tx));
  return b;
}

Digest32 tx_root(std::span<const Transaction> txs) {
  std::vector<Digest32> leaves;
  leaves.reserve(txs.size());
  for (const auto& tx : txs) leaves.push_back(tx.leaf_hash());
  return merkle_root(leaves);
}

Block make_genesis(const codec::Bytes& chain_salt, const std::vector<registry::AuthorityIdentity>& authorities,
                   const BlockSigner& signer, std::int64_t timestamp) {
  if (authorities.empty()) throw LedgerError(LedgerError::Code::EmptyAuthoritySet, "genesis needs at least one authority");
  Block b;
  b.transactions.push_back(registry::make_bootstrap(signer.producer_id, chain_salt, authorities, timestamp));
  auto state = registry::apply_tx(registry::RegistryState{}, b.transactions.front());
  b.header.height = 0;
  b.header.prev_hash = Digest32::zero();
  b.header.tx_root = tx_root(b.transactions);
  b.header.state_root = registry::state_root(state);
  b.header.timestamp = timestamp;
  b.header.producer_id = signer.producer_id;
  sign_header(b.header, signer);
  return b;
}

Block append_block(const BlockHeader& head, std::vector<Transaction> txs, const Digest32& state_root,
                   const BlockSigner& signer, std::int64_t timestamp) {
  if (txs.empty()) throw LedgerError(LedgerError::Code::EmptyBlock, "a block needs at least one transaction");
  if (timestamp < head.timestamp) {
    throw LedgerError(LedgerError::Code::TimestampRegression,
                      "timestamp " + std::to_string(timestamp) + " precedes head " + std::to_string(head.timestamp));
  }
  Block b;
  b.transactions = std::move(txs);
  b.header.height = head.height + 1;
  b.header.prev_hash = block_id(head);
  b.header.tx_root = tx_root(b.transactions);
  b.header.state_root = state_root;
  b.header.timestamp = timestamp;
  b.header.producer_id = signer.producer_id;
  sign_header(b.header, signer);
  return b;
}

}  // namespace vaxledger::ledger
