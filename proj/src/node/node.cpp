#include "vaxledger/node.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>

namespace vaxledger::node {

namespace {

std::int64_t system_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

crypto::PublicKey parse_pubkey(const std::optional<std::string>& hex, const char* what) {
  if (!hex) throw ConfigError(std::string(what) + " is required");
  try {
    return crypto::PublicKey::from_hex(*hex);
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + " must be 64 lowercase hex characters");
  }
}

crypto::SigningKey load_key(const std::optional<std::filesystem::path>& path, const char* what) {
  if (!path) throw ConfigError(std::string(what) + " is required");
  try {
    return crypto::SigningKey::load(*path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot load ") + what + " " + path->string() + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(NodeErrorCode c) {
  switch (c) {
    case NodeErrorCode::PoolDuplicate: return "PoolDuplicate";
    case NodeErrorCode::WouldFail: return "WouldFail";
    case NodeErrorCode::PersistFailure: return "PersistFailure";
    case NodeErrorCode::PeerUnreachable: return "PeerUnreachable";
    case NodeErrorCode::InvalidBlockFromPeer: return "InvalidBlockFromPeer";
    case NodeErrorCode::WrongMode: return "WrongMode";
    case NodeErrorCode::NotFound: return "NotFound";
    case NodeErrorCode::Unavailable: return "Unavailable";
    case NodeErrorCode::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

NodeError::NodeError(NodeErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

NodeError NodeError::would_fail(const registry::TxError& inner) {
  NodeError e(NodeErrorCode::WouldFail, inner.what());
  e.tx_error_ = inner.code();
  return e;
}

NodeError NodeError::invalid_block(const ledger::ChainError& err) {
  NodeError e(NodeErrorCode::InvalidBlockFromPeer, err.describe());
  e.chain_error_ = err;
  return e;
}

// ---------------------------------------------------------------------------

HttpPeerClient::HttpPeerClient(std::string base_url) : base_url_(std::move(base_url)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::vector<codec::Value> HttpPeerClient::fetch_blocks(std::uint64_t from, std::size_t limit) {
  httplib::Client client(base_url_);
  if (!client.is_valid()) throw NodeError(NodeErrorCode::PeerUnreachable, "invalid peer url " + base_url_);
  client.set_connection_timeout(5);
  client.set_read_timeout(30);
  const std::string path = "/blocks?from=" + std::to_string(from) + "&limit=" + std::to_string(limit);
  auto res = client.Get(path);
  if (!res) {
    throw NodeError(NodeErrorCode::PeerUnreachable, base_url_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw NodeError(NodeErrorCode::PeerUnreachable, base_url_ + path + " returned " + std::to_string(res->status));
  }
  codec::Value body;
  try {
    body = codec::decode(res->body);
  } catch (const codec::DecodeError& e) {
    throw NodeError::invalid_block({ledger::ChainErrorCode::MalformedBlock, from, e.what()});
  }
  if (!body.is_list()) {
    throw NodeError::invalid_block({ledger::ChainErrorCode::MalformedBlock, from, "block list expected"});
  }
  return body.as_list();
}

// ---------------------------------------------------------------------------

Node::Node(NodeConfig config, NodeOptions options)
    : config_(std::move(config)), options_(std::move(options)), store_(config_.chain_file()) {
  config_.validate();
  crypto::ensure_initialized();
  if (!options_.clock) options_.clock = system_now;
  if (!options_.peer_factory) {
    options_.peer_factory = [](const std::string& url) { return std::make_unique<HttpPeerClient>(url); };
  }

  auth::AuthOptions auth_options;
  if (config_.kdf) auth_options.kdf = *config_.kdf;
  auth_options.clock = options_.clock;
  auth_ = std::make_unique<auth::AuthService>(config_.accounts_file(), auth_options);

  if (config_.mode == Mode::Producer) {
    signer_.emplace(ledger::BlockSigner{config_.producer_id, load_key(config_.producer_key_path, "producer key")});
    credential_key_.emplace(load_key(config_.credential_key_path, "credential key"));
    producer_pub_ = signer_->key.public_key();
    credential_pub_ = credential_key_->public_key();
    if (config_.producer_pubkey && parse_pubkey(config_.producer_pubkey, "producer_pubkey") != producer_pub_) {
      throw ConfigError("producer_pubkey does not match producer key file");
    }
    if (config_.credential_pubkey && parse_pubkey(config_.credential_pubkey, "credential_pubkey") != credential_pub_) {
      throw ConfigError("credential_pubkey does not match credential key file");
    }
  } else {
    producer_pub_ = parse_pubkey(config_.producer_pubkey, "producer_pubkey");
    credential_pub_ = parse_pubkey(config_.credential_pubkey, "credential_pubkey");
  }

  std::vector<Block> blocks = store_.load_and_recover();
  ledger::ChainValidator validator(producer_pub_);
  for (const auto& b : blocks) {
    if (auto err = validator.push(b)) throw ledger::CorruptChainFile(*err);
  }
  if (config_.mode == Mode::Producer && blocks.empty()) {
    throw ConfigError("chain file " + config_.chain_file().string() + " has no genesis block; run init first");
  }
  pending_ = validator.state();
  snapshot_.state = std::make_shared<const registry::RegistryState>(validator.state());
  snapshot_.head = validator.head();
  chain_ = std::move(blocks);
  spdlog::info("node loaded {} blocks from {}", chain_.size(), config_.chain_file().string());
}

Node::~Node() { stop(); }

Node::Snapshot Node::snapshot() const {
  std::shared_lock lock(read_mu_);
  return snapshot_;
}

void Node::commit_locked(std::vector<Block> blocks, registry::RegistryState state) {
  auto next = std::make_shared<const registry::RegistryState>(std::move(state));
  std::unique_lock lock(read_mu_);
  for (auto& b : blocks) chain_.push_back(std::move(b));
  snapshot_.state = std::move(next);
  snapshot_.head = chain_.back().header;
}

std::int64_t Node::next_nonce_locked(const std::string& actor) const {
  auto it = pending_.nonces.find(actor);
  return it == pending_.nonces.end() ? 1 : it->second + 1;
}

Receipt Node::enqueue_locked(const Transaction& tx) {
  if (config_.mode != Mode::Producer) throw NodeError(NodeErrorCode::WrongMode, "verifier nodes do not accept writes");
  for (const auto& p : pool_) {
    if (p.actor_id == tx.actor_id && p.nonce == tx.nonce) {
      throw NodeError(NodeErrorCode::PoolDuplicate,
                      "pending transaction from '" + tx.actor_id + "' with nonce " + std::to_string(tx.nonce));
    }
  }
  try {
    registry::apply_tx_in_place(pending_, tx);
  } catch (const registry::TxError& e) {
    throw NodeError::would_fail(e);
  }
  pool_.push_back(tx);
  return Receipt{true, pool_.size() - 1, tx.nonce};
}

void Node::enqueue_unchecked(const Transaction& tx) {
  std::lock_guard lock(write_mu_);
  if (config_.mode != Mode::Producer) throw NodeError(NodeErrorCode::WrongMode, "verifier nodes do not accept writes");
  for (const auto& p : pool_) {
    if (p.actor_id == tx.actor_id && p.nonce == tx.nonce) throw NodeError(NodeErrorCode::PoolDuplicate, tx.actor_id);
  }
  pool_.push_back(tx);
}

Receipt Node::submit_tx(const Transaction& tx, std::string_view token_id) {
  auto role = registry::required_role(tx.kind);
  if (!role) throw auth::AuthError(auth::AuthErrorCode::Forbidden, "transaction kind cannot be submitted");
  std::string account = auth_->authorize(token_id, *role);
  if (account != tx.actor_id) throw auth::AuthError(auth::AuthErrorCode::Forbidden, "actor_id must match the session");
  std::lock_guard lock(write_mu_);
  return enqueue_locked(tx);
}

Receipt Node::submit_record(std::string_view token_id, const IssueRequest& request) {
  std::string account = auth_->authorize(token_id, registry::Role::Provider);
  if (!registry::is_valid_aadhaar(request.aadhaar)) throw registry::InvalidAadhaar();
  std::lock_guard lock(write_mu_);
  if (!pending_.bootstrapped()) throw NodeError(NodeErrorCode::Unavailable, "chain not initialized");
  registry::IssueRecordRequest req{registry::subject_key(request.aadhaar, pending_.chain_salt), request.full_name,
                                   request.vaccine_name, request.dose_number, request.date};
  return enqueue_locked(registry::make_issue_record(account, next_nonce_locked(account), req, now()));
}

auth::Account Node::create_account(std::string_view token_id, std::string_view email, std::string_view password,
                                   registry::Role role, std::optional<std::string> hospital_name) {
  auth::SessionToken actor = auth_->authenticate(token_id);
  if (config_.mode != Mode::Producer) throw NodeError(NodeErrorCode::WrongMode, "verifier nodes do not accept writes");
  auto hook = [&](const auth::Account& a) {
    std::lock_guard lock(write_mu_);
    const std::int64_t nonce = next_nonce_locked(actor.account_id);
    Transaction tx = a.role == registry::Role::Provider
                         ? registry::make_register_provider(actor.account_id, nonce, a.account_id,
                                                            a.hospital_name.value_or(""), now())
                         : registry::make_register_officer(actor.account_id, nonce, a.account_id, now());
    enqueue_locked(tx);
  };
  return auth_->create_account(actor, email, password, role, std::move(hospital_name), hook);
}

auth::SessionToken Node::login(std::string_view email, std::string_view password) {
  return auth_->login(email, password);
}

std::optional<Block> Node::produce_block(std::int64_t now) {
  std::lock_guard lock(write_mu_);
  if (config_.mode != Mode::Producer) throw NodeError(NodeErrorCode::WrongMode, "only the producer makes blocks");
  if (halted_) throw ledger::PersistFailure("block production halted after an earlier persist failure");
  if (pool_.empty()) return std::nullopt;

  const Snapshot snap = snapshot();
  registry::RegistryState state = *snap.state;
  std::vector<Transaction> survivors;
  std::vector<RejectedTx> rejected;
  for (const auto& tx : pool_) {
    try {
      registry::apply_tx_in_place(state, tx);
      survivors.push_back(tx);
    } catch (const registry::TxError& e) {
      rejected.push_back({tx, e.what(), now});
    }
  }
  auto record_rejections = [&] {
    for (auto& r : rejected) {
      spdlog::warn("dropped transaction {} nonce {} from '{}': {}", registry::to_string(r.tx.kind), r.tx.nonce,
                   r.tx.actor_id, r.reason);
      rejections_.push_back(std::move(r));
    }
  };
  if (survivors.empty()) {
    record_rejections();
    pool_.clear();
    pending_ = *snap.state;
    return std::nullopt;
  }

  const BlockHeader& head = *snap.head;
  Block block = ledger::append_block(head, std::move(survivors), registry::state_root(state), *signer_,
                                     std::max(now, head.timestamp));
  try {
    store_.append(block);
  } catch (const ledger::PersistFailure& e) {
    halted_ = true;
    spdlog::critical("persisting block {} failed, block production halted: {}", block.header.height, e.what());
    throw;
  }
  record_rejections();
  pool_.clear();
  pending_ = state;
  commit_locked({block}, std::move(state));
  spdlog::info("produced block {} with {} transactions", block.header.height, block.transactions.size());
  return block;
}

std::size_t Node::sync_from_peer(const std::string& peer_url) {
  auto peer = options_.peer_factory(peer_url);
  return sync_from(*peer);
}

std::size_t Node::sync_from(PeerClient& peer) {
  std::lock_guard lock(write_mu_);
  if (config_.mode != Mode::Verifier) throw NodeError(NodeErrorCode::WrongMode, "only verifiers sync from a peer");
  const Snapshot snap = snapshot();
  ledger::ChainValidator validator(producer_pub_, *snap.state, snap.head);
  std::vector<Block> fetched;
  for (;;) {
    auto page = peer.fetch_blocks(validator.next_height(), kMaxBlocksPerPage);
    if (page.empty()) break;
    for (const auto& v : page) {
      const std::uint64_t at = validator.next_height();
      std::optional<ledger::ChainError> err;
      try {
        Block b = Block::from_value(v);
        err = validator.push(b);
        if (!err) fetched.push_back(std::move(b));
      } catch (const codec::SchemaError& e) {
        err = ledger::ChainError{ledger::ChainErrorCode::MalformedBlock, at, e.what()};
      }
      if (err) {
        spdlog::critical("SECURITY: peer served an invalid block: {}; nothing from this sync was persisted",
                         err->describe());
        throw NodeError::invalid_block(*err);
      }
    }
    if (page.size() < kMaxBlocksPerPage) break;
  }
  if (fetched.empty()) return 0;
  try {
    store_.append_all(fetched);
  } catch (const ledger::PersistFailure& e) {
    throw NodeError(NodeErrorCode::PersistFailure, e.what());
  }
  const std::size_t n = fetched.size();
  commit_locked(std::move(fetched), validator.state());
  spdlog::info("synced {} blocks, head now {}", n, validator.head()->height);
  return n;
}

std::optional<LookupResult> Node::officer_lookup(std::string_view aadhaar, std::string_view token_id) const {
  auth_->authorize(token_id, registry::Role::Officer);
  if (!registry::is_valid_aadhaar(aadhaar)) throw registry::InvalidAadhaar();
  const Snapshot snap = snapshot();
  if (!snap.state->bootstrapped()) return std::nullopt;
  auto record = registry::lookup_record(*snap.state, registry::subject_key(aadhaar, snap.state->chain_salt));
  if (!record) return std::nullopt;
  return LookupResult{std::move(*record), snap.head->height};
}

std::string Node::credential_payload(std::string_view aadhaar, std::string_view token_id) const {
  auth_->authorize_any(token_id, {registry::Role::Provider, registry::Role::Officer});
  if (!registry::is_valid_aadhaar(aadhaar)) throw registry::InvalidAadhaar();
  if (!credential_key_) throw NodeError(NodeErrorCode::Unavailable, "this node holds no credential key");
  const Snapshot snap = snapshot();
  if (!snap.state->bootstrapped()) throw NodeError(NodeErrorCode::NotFound, "no record");
  auto record = registry::lookup_record(*snap.state, registry::subject_key(aadhaar, snap.state->chain_salt));
  if (!record) throw NodeError(NodeErrorCode::NotFound, "no record");
  auto c = credential::issue_credential(*record, ledger::block_id(*snap.head), *credential_key_, now());
  return credential::encode_qr_payload(c);
}

credential::Status Node::verify_payload(std::string_view qr_payload) const {
  return credential::verify_qr_payload(qr_payload, credential_pub_, now(), config_.validity_window_days * 86400);
}

BlockHeader Node::head() const {
  auto snap = snapshot();
  if (!snap.head) throw NodeError(NodeErrorCode::NotFound, "chain is empty");
  return *snap.head;
}

codec::Digest32 Node::head_id() const { return ledger::block_id(head()); }

std::uint64_t Node::height() const { return head().height; }

codec::Digest32 Node::state_root() const { return registry::state_root(*snapshot().state); }

std::shared_ptr<const registry::RegistryState> Node::state() const { return snapshot().state; }

std::vector<Block> Node::blocks(std::uint64_t from, std::size_t limit) const {
  limit = std::min(limit, kMaxBlocksPerPage);
  std::shared_lock lock(read_mu_);
  std::vector<Block> out;
  for (std::uint64_t h = from; h < chain_.size() && out.size() < limit; ++h) out.push_back(chain_[h]);
  return out;
}

std::vector<RejectedTx> Node::rejections() const {
  std::lock_guard lock(write_mu_);
  return rejections_;
}

std::size_t Node::pool_size() const {
  std::lock_guard lock(write_mu_);
  return pool_.size();
}

bool Node::halted() const {
  std::lock_guard lock(write_mu_);
  return halted_;
}

void Node::start() {
  std::lock_guard lock(loop_mu_);
  if (loop_.joinable()) return;
  stopping_ = false;
  loop_ = std::thread([this] { run_loop(); });
}

void Node::stop() {
  {
    std::lock_guard lock(loop_mu_);
    stopping_ = true;
  }
  loop_cv_.notify_all();
  if (loop_.joinable()) loop_.join();
}

void Node::run_loop() {
  const auto interval = std::chrono::seconds(config_.block_interval_s);
  for (;;) {
    {
      std::unique_lock lock(loop_mu_);
      if (loop_cv_.wait_for(lock, interval, [this] { return stopping_; })) return;
    }
    try {
      if (config_.mode == Mode::Producer) {
        if (!halted()) produce_block(now());
      } else {
        sync_from_peer(*config_.peer_url);
      }
    } catch (const std::exception& e) {
      spdlog::error("background round failed: {}", e.what());
    }
  }
}

// ---------------------------------------------------------------------------

InitResult initialize_data_dir(const InitOptions& options) {
  namespace fs = std::filesystem;
  crypto::ensure_initialized();
  const fs::path dir = options.data_dir;
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) throw ConfigError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir, ec)) throw ConfigError(dir.string() + " is not empty");
  }
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());

  NodeConfig config;
  config.mode = Mode::Producer;
  config.data_dir = dir;
  config.listen_addr = options.listen_addr;
  config.producer_key_path = dir / "producer.key";
  config.credential_key_path = dir / "credential.key";
  config.kdf = options.kdf;

  auto producer_key = crypto::SigningKey::generate();
  auto credential_key = crypto::SigningKey::generate();
  producer_key.save(*config.producer_key_path);
  credential_key.save(*config.credential_key_path);
  config.producer_pubkey = producer_key.public_key().hex();
  config.credential_pubkey = credential_key.public_key().hex();

  const std::int64_t ts = options.timestamp != 0 ? options.timestamp : system_now();
  const codec::Bytes salt = crypto::random_bytes(16);
  ledger::BlockSigner signer{config.producer_id, std::move(producer_key)};
  Block genesis = ledger::make_genesis(salt, {{options.authority_account_id, credential_key.public_key()}}, signer, ts);

  // The account goes first: it validates email and password before the chain
  // file exists.
  auth::AuthOptions auth_options;
  if (options.kdf) auth_options.kdf = *options.kdf;
  auth::AuthService auth(config.accounts_file(), auth_options);
  try {
    auth.bootstrap_authority(options.authority_account_id, options.authority_email, options.authority_password);
  } catch (...) {
    for (const auto& entry : fs::directory_iterator(dir, ec)) fs::remove_all(entry.path(), ec);
    throw;
  }
  ledger::ChainStore(config.chain_file()).append(genesis);

  // Paths in the saved config are relative to the config file.
  NodeConfig saved = config;
  saved.data_dir = ".";
  saved.producer_key_path = "producer.key";
  saved.credential_key_path = "credential.key";
  const fs::path config_path = dir / "config.json";
  saved.save(config_path);

  return InitResult{signer.key.public_key(), credential_key.public_key(), config_path,
                    ledger::block_id(genesis.header)};
}

}  // namespace vaxledger::node
