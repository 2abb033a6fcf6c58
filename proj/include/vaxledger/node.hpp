#pragma once

#include "vaxledger/auth.hpp"
#include "vaxledger/block.hpp"
#include "vaxledger/chain.hpp"
#include "vaxledger/chain_store.hpp"
#include "vaxledger/credential.hpp"
#include "vaxledger/node_config.hpp"
#include "vaxledger/registry_state.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

namespace vaxledger::node {

using ledger::Block;
using ledger::BlockHeader;
using registry::Transaction;

enum class NodeErrorCode {
  PoolDuplicate,
  WouldFail,
  PersistFailure,
  PeerUnreachable,
  InvalidBlockFromPeer,
  WrongMode,
  NotFound,
  Unavailable,
  BadRequest,
};

std::string_view to_string(NodeErrorCode c);

class NodeError : public std::runtime_error {
 public:
  NodeError(NodeErrorCode code, const std::string& detail);
  static NodeError would_fail(const registry::TxError& inner);
  static NodeError invalid_block(const ledger::ChainError& err);

  NodeErrorCode code() const { return code_; }
  // Set for WouldFail.
  std::optional<registry::TxErrorCode> tx_error() const { return tx_error_; }
  // Set for InvalidBlockFromPeer.
  const std::optional<ledger::ChainError>& chain_error() const { return chain_error_; }

 private:
  NodeErrorCode code_;
  std::optional<registry::TxErrorCode> tx_error_;
  std::optional<ledger::ChainError> chain_error_;
};

struct Receipt {
  bool accepted = false;
  std::size_t position = 0;
  std::int64_t nonce = 0;
};

struct RejectedTx {
  Transaction tx;
  std::string reason;
  std::int64_t rejected_at = 0;
};

struct LookupResult {
  registry::PassportRecord record;
  std::uint64_t verified_at_height = 0;
};

struct IssueRequest {
  std::string aadhaar;
  std::string full_name;
  std::string vaccine_name;
  std::int64_t dose_number = 0;
  std::string date;
};

// Source of blocks for verifier sync.
class PeerClient {
 public:
  virtual ~PeerClient() = default;
  // Blocks at heights [from, from + limit) as decoded JSON values. Throws
  // NodeError(PeerUnreachable).
  virtual std::vector<codec::Value> fetch_blocks(std::uint64_t from, std::size_t limit) = 0;
};

class HttpPeerClient : public PeerClient {
 public:
  explicit HttpPeerClient(std::string base_url);
  std::vector<codec::Value> fetch_blocks(std::uint64_t from, std::size_t limit) override;

 private:
  std::string base_url_;
};

inline constexpr std::size_t kMaxBlocksPerPage = 100;

struct NodeOptions {
  std::function<std::int64_t()> clock;  // unix seconds; defaults to the system clock
  std::function<std::unique_ptr<PeerClient>(const std::string&)> peer_factory;
};

// A running ledger node. One writer at a time owns the pool, block production
// and sync; reads work from an immutable snapshot of the last committed state.
class Node {
 public:
  Node(NodeConfig config, NodeOptions options = {});
  ~Node();

  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  const NodeConfig& config() const { return config_; }
  auth::AuthService& auth() { return *auth_; }
  std::int64_t now() const { return options_.clock(); }

  // --- writes ---
  Receipt submit_tx(const Transaction& tx, std::string_view token_id);
  Receipt submit_record(std::string_view token_id, const IssueRequest& request);
  auth::Account create_account(std::string_view token_id, std::string_view email, std::string_view password,
                               registry::Role role, std::optional<std::string> hospital_name);
  auth::SessionToken login(std::string_view email, std::string_view password);

  // Adds to the pool with only the duplicate check. A transaction that passed
  // the dry run always applies at production, so this is the way to exercise
  // the drop path.
  void enqueue_unchecked(const Transaction& tx);

  // Producer only. Returns nullopt when nothing survives the pool drain.
  std::optional<Block> produce_block(std::int64_t now);

  // Verifier only. Returns the number of blocks fetched and committed.
  std::size_t sync_from_peer(const std::string& peer_url);
  std::size_t sync_from(PeerClient& peer);

  // --- reads ---
  std::optional<LookupResult> officer_lookup(std::string_view aadhaar, std::string_view token_id) const;
  std::string credential_payload(std::string_view aadhaar, std::string_view token_id) const;
  credential::Status verify_payload(std::string_view qr_payload) const;

  BlockHeader head() const;
  codec::Digest32 head_id() const;
  std::uint64_t height() const;
  codec::Digest32 state_root() const;
  std::shared_ptr<const registry::RegistryState> state() const;
  std::vector<Block> blocks(std::uint64_t from, std::size_t limit) const;
  std::vector<RejectedTx> rejections() const;
  std::size_t pool_size() const;
  bool halted() const;

  const crypto::PublicKey& credential_public_key() const { return credential_pub_; }
  const crypto::PublicKey& producer_public_key() const { return producer_pub_; }

  // Background block production (producer) or periodic sync (verifier) every
  // block_interval_s. stop() waits for an in-flight round to finish.
  void start();
  void stop();

 private:
  struct Snapshot {
    std::shared_ptr<const registry::RegistryState> state;
    std::optional<BlockHeader> head;
  };

  Snapshot snapshot() const;
  Receipt enqueue_locked(const Transaction& tx);
  void commit_locked(std::vector<Block> blocks, registry::RegistryState state);
  std::int64_t next_nonce_locked(const std::string& actor) const;
  void run_loop();

  NodeConfig config_;
  NodeOptions options_;
  std::unique_ptr<auth::AuthService> auth_;
  ledger::ChainStore store_;
  std::optional<ledger::BlockSigner> signer_;
  std::optional<crypto::SigningKey> credential_key_;
  crypto::PublicKey producer_pub_;
  crypto::PublicKey credential_pub_;

  // Writer state.
  mutable std::mutex write_mu_;
  std::deque<Transaction> pool_;
  registry::RegistryState pending_;  // committed state + pool
  bool halted_ = false;
  std::vector<RejectedTx> rejections_;

  // Committed chain and snapshot.
  mutable std::shared_mutex read_mu_;
  std::vector<Block> chain_;
  Snapshot snapshot_;

  std::mutex loop_mu_;
  std::condition_variable loop_cv_;
  bool stopping_ = false;
  std::thread loop_;
};

// Creates a fresh producer data directory: keys, genesis, the bootstrap
// authority account and a config file. Throws ConfigError if `data_dir` is not
// empty.
struct InitResult {
  crypto::PublicKey producer_pubkey;
  crypto::PublicKey credential_pubkey;
  std::filesystem::path config_path;
  codec::Digest32 genesis_id;
};

struct InitOptions {
  std::filesystem::path data_dir;
  std::string authority_email;
  std::string authority_password;
  std::string authority_account_id = "authority";
  std::string listen_addr = "127.0.0.1:8080";
  std::optional<auth::KdfParams> kdf;
  std::int64_t timestamp = 0;  // 0 means now
};

InitResult initialize_data_dir(const InitOptions& options);

}  // namespace vaxledger::node
