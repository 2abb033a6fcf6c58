#pragma once

#include "vaxledger/codec.hpp"
#include "vaxledger/crypto.hpp"
#include "vaxledger/transaction.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vaxledger::ledger {

using codec::Digest32;
using registry::Transaction;

struct BlockHeader {
  std::uint64_t height = 0;
  Digest32 prev_hash;
  Digest32 tx_root;
  Digest32 state_root;
  std::int64_t timestamp = 0;
  std::string producer_id;
  crypto::Signature signature{};

  codec::Value to_value() const;
  // The signed message: canonical encoding of every field except signature.
  std::string signing_bytes() const;
  static BlockHeader from_value(const codec::Value& v);

  friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

// sha256 of the canonical header encoding, signature included.
Digest32 block_id(const BlockHeader& header);

struct Block {
  BlockHeader header;
  std::vector<Transaction> transactions;

  codec::Value to_value() const;
  static Block from_value(const codec::Value& v);

  friend bool operator==(const Block&, const Block&) = default;
};

Digest32 tx_root(std::span<const Transaction> txs);

struct BlockSigner {
  std::string producer_id;
  crypto::SigningKey key;
};

class LedgerError : public std::runtime_error {
 public:
  enum class Code { EmptyAuthoritySet, EmptyBlock, TimestampRegression };
  LedgerError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

// Height 0, zero prev_hash, a single bootstrap transaction authored by the
// producer. Throws LedgerError(EmptyAuthoritySet).
Block make_genesis(const codec::Bytes& chain_salt, const std::vector<registry::AuthorityIdentity>& authorities,
                   const BlockSigner& signer, std::int64_t timestamp);

// Throws LedgerError(EmptyBlock | TimestampRegression).
Block append_block(const BlockHeader& head, std::vector<Transaction> txs, const Digest32& state_root,
                   const BlockSigner& signer, std::int64_t timestamp);

}  // namespace vaxledger::ledger
