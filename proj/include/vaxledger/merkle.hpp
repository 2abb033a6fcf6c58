#pragma once

#include "vaxledger/codec.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace vaxledger::ledger {

using codec::Digest32;

// Which side of the running hash the sibling sits on.
enum class Side { Left, Right };

struct MerkleProof {
  std::size_t leaf_index = 0;
  std::vector<Digest32> siblings;
  std::vector<Side> directions;

  friend bool operator==(const MerkleProof&, const MerkleProof&) = default;
};

class IndexOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Binary tree, parent = sha256(left || right). An odd node at any level is
// paired with itself, including a lone leaf. No leaves hashes the empty string.
Digest32 merkle_root(std::span<const Digest32> leaves);

MerkleProof merkle_prove(std::span<const Digest32> leaves, std::size_t index);

// Also checks that the directions agree with the bits of leaf_index.
bool merkle_verify(const Digest32& leaf, const MerkleProof& proof, const Digest32& root);

Digest32 hash_pair(const Digest32& left, const Digest32& right);

}  // namespace vaxledger::ledger
