#include "vaxledger/merkle.hpp"

#include <array>

namespace vaxledger::ledger {

namespace {

std::vector<Digest32> next_level(const std::vector<Digest32>& level) {
  std::vector<Digest32> up;
  up.reserve((level.size() + 1) / 2);
  for (std::size_t i = 0; i < level.size(); i += 2) {
    const Digest32& right = i + 1 < level.size() ? level[i + 1] : level[i];
    up.push_back(hash_pair(level[i], right));
  }
  return up;
}

}  // namespace

Digest32 hash_pair(const Digest32& left, const Digest32& right) {
  std::array<std::uint8_t, 64> buf;
  std::copy(left.bytes.begin(), left.bytes.end(), buf.begin());
  std::copy(right.bytes.begin(), right.bytes.end(), buf.begin() + 32);
  return codec::hash_sha256(buf);
}

Digest32 merkle_root(std::span<const Digest32> leaves) {
  if (leaves.empty()) return codec::hash_sha256(std::string_view{});
  std::vector<Digest32> level(leaves.begin(), leaves.end());
  do {
    level = next_level(level);
  } while (level.size() > 1);
  return level.front();
}

MerkleProof merkle_prove(std::span<const Digest32> leaves, std::size_t index) {
  if (index >= leaves.size()) {
    throw IndexOutOfRange("leaf index " + std::to_string(index) + " out of range for " +
                          std::to_string(leaves.size()) + " leaves");
  }
  MerkleProof proof;
  proof.leaf_index = index;
  std::vector<Digest32> level(leaves.begin(), leaves.end());
  std::size_t pos = index;
  do {
    if (pos % 2 == 0) {
      proof.siblings.push_back(pos + 1 < level.size() ? level[pos + 1] : level[pos]);
      proof.directions.push_back(Side::Right);
    } else {
      proof.siblings.push_back(level[pos - 1]);
      proof.directions.push_back(Side::Left);
    }
    level = next_level(level);
    pos /= 2;
  } while (level.size() > 1);
  return proof;
}

bool merkle_verify(const Digest32& leaf, const MerkleProof& proof, const Digest32& root) {
  if (proof.siblings.empty() || proof.siblings.size() != proof.directions.size()) return false;
  if (proof.siblings.size() < 64 && (proof.leaf_index >> proof.siblings.size()) != 0) return false;
  Digest32 acc = leaf;
  std::size_t pos = proof.leaf_index;
  for (std::size_t i = 0; i < proof.siblings.size(); ++i, pos >>= 1) {
    Side expected = (pos & 1) ? Side::Left : Side::Right;
    if (proof.directions[i] != expected) return false;
    acc = expected == Side::Right ? hash_pair(acc, proof.siblings[i]) : hash_pair(proof.siblings[i], acc);
  }
  return acc == root;
}

}  // namespace vaxledger::ledger
