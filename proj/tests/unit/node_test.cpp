#include "vaxledger/chain_store.hpp"
#include "vaxledger/node.hpp"

#include "node_harness.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

using namespace vaxledger;
using node::NodeError;
using node::NodeErrorCode;
namespace vt = vaxledger::testing;

namespace {

const std::string kAadhaar = vt::make_aadhaar("23456789012");

node::IssueRequest dose(const std::string& aadhaar, const std::string& vaccine, std::int64_t n,
                        const std::string& name = "Asha Rao") {
  return {aadhaar, name, vaccine, n, "2021-0" + std::to_string(n) + "-10"};
}

NodeErrorCode node_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const NodeError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no NodeError thrown";
  return NodeErrorCode::BadRequest;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class NodeTest : public ::testing::Test {
 protected:
  NodeTest() { h.setup_roles(); }

  std::optional<ledger::Block> produce() {
    ++*h.clock;
    return h.node->produce_block(h.clock->load());
  }

  vt::NodeHarness h;
};

}  // namespace

TEST(NodeInit, FreshDirectoryHasGenesisOnly) {
  vt::NodeHarness h;
  EXPECT_EQ(h.node->height(), 0u);
  EXPECT_EQ(h.node->head_id(), h.init.genesis_id);
  auto chain = slurp(h.config().chain_file());
  EXPECT_EQ(std::count(chain.begin(), chain.end(), '\n'), 1);
  EXPECT_EQ(h.node->auth().account_count(), 1u);
  EXPECT_EQ(h.node->state()->accounts_roles.at("authority"), registry::Role::Authority);
  EXPECT_EQ(h.node->state()->chain_salt.size(), 16u);
}

TEST(NodeInit, RefusesNonEmptyDirectory) {
  vt::NodeHarness h;
  node::InitOptions o;
  o.data_dir = h.config().data_dir;
  o.authority_email = vt::kAuthorityEmail;
  o.authority_password = vt::kAuthorityPassword;
  EXPECT_THROW(node::initialize_data_dir(o), node::ConfigError);
}

TEST_F(NodeTest, EmptyPoolProducesNothing) {
  const auto before = h.node->height();
  EXPECT_FALSE(produce().has_value());
  EXPECT_EQ(h.node->height(), before);
}

TEST_F(NodeTest, AccountCreationLandsOnChain) {
  auto block = h.node->blocks(1, 1).at(0);
  ASSERT_EQ(block.transactions.size(), 2u);
  EXPECT_EQ(block.transactions[0].kind, registry::TxKind::RegisterProvider);
  EXPECT_EQ(block.transactions[0].payload.at("hospital_name").as_text(), vt::kHospital);
  EXPECT_EQ(block.transactions[0].actor_id, "authority");
  EXPECT_EQ(h.node->state()->accounts_roles.at(h.provider_id), registry::Role::Provider);
  EXPECT_EQ(h.node->state()->hospitals.at(h.provider_id), vt::kHospital);
  EXPECT_EQ(h.node->state()->accounts_roles.at(h.officer_id), registry::Role::Officer);
}

TEST_F(NodeTest, AccountWithStMaryHospital) {
  h.node->create_account(h.authority_token, "nurse@stmary.org", "Nurse-Pass-0001", registry::Role::Provider,
                         std::string("St. Mary"));
  auto block = produce();
  ASSERT_TRUE(block);
  ASSERT_EQ(block->transactions.size(), 1u);
  EXPECT_EQ(block->transactions[0].kind, registry::TxKind::RegisterProvider);
  EXPECT_EQ(block->transactions[0].payload.at("hospital_name").as_text(), "St. Mary");
}

TEST_F(NodeTest, SubmitRecordReceiptAndPosition) {
  auto r0 = h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1));
  EXPECT_TRUE(r0.accepted);
  EXPECT_EQ(r0.position, 0u);
  auto r1 = h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 2));
  EXPECT_EQ(r1.position, 1u);
  EXPECT_EQ(r1.nonce, r0.nonce + 1);
}

TEST_F(NodeTest, SameTxTwiceIsPoolDuplicate) {
  const auto key = registry::subject_key(kAadhaar, h.node->state()->chain_salt);
  auto tx = registry::make_issue_record(h.provider_id, 1, {key, "Asha Rao", "Covishield", 1, "2021-05-01"}, 5);
  EXPECT_TRUE(h.node->submit_tx(tx, h.provider_token).accepted);
  EXPECT_EQ(node_code([&] { h.node->submit_tx(tx, h.provider_token); }), NodeErrorCode::PoolDuplicate);
  EXPECT_EQ(h.node->pool_size(), 1u);
}

TEST_F(NodeTest, SubmitTxChecksSessionAndRole) {
  const auto key = registry::subject_key(kAadhaar, h.node->state()->chain_salt);
  auto tx = registry::make_issue_record(h.provider_id, 1, {key, "Asha Rao", "Covishield", 1, "2021-05-01"}, 5);
  EXPECT_THROW(h.node->submit_tx(tx, h.officer_token), auth::AuthError);
  EXPECT_THROW(h.node->submit_tx(tx, "no-such-token"), auth::AuthError);
  // Authority passes the role gate but may not act as someone else.
  EXPECT_THROW(h.node->submit_tx(tx, h.authority_token), auth::AuthError);
  EXPECT_EQ(h.node->pool_size(), 0u);
}

TEST_F(NodeTest, DuplicateDoseAgainstStateWouldFail) {
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1));
  ASSERT_TRUE(produce());
  try {
    h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1));
    FAIL() << "accepted a duplicate dose";
  } catch (const NodeError& e) {
    EXPECT_EQ(e.code(), NodeErrorCode::WouldFail);
    EXPECT_EQ(e.tx_error(), registry::TxErrorCode::DuplicateDose);
  }
  // Also against the pool, before any block.
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covaxin", 1));
  try {
    h.node->submit_record(h.provider_token, dose(kAadhaar, "Covaxin", 1));
    FAIL();
  } catch (const NodeError& e) {
    EXPECT_EQ(e.tx_error(), registry::TxErrorCode::DuplicateDose);
  }
}

TEST_F(NodeTest, AuthorityCannotIssueRecords) {
  try {
    h.node->submit_record(h.authority_token, dose(kAadhaar, "Covishield", 1));
    FAIL();
  } catch (const NodeError& e) {
    EXPECT_EQ(e.tx_error(), registry::TxErrorCode::Unauthorized);
  }
}

TEST_F(NodeTest, InvalidAadhaarRejectedBeforePool) {
  std::string bad = kAadhaar;
  bad[11] = bad[11] == '0' ? '1' : '0';
  EXPECT_THROW(h.node->submit_record(h.provider_token, dose(bad, "Covishield", 1)), registry::InvalidAadhaar);
  EXPECT_THROW(h.node->submit_record(h.provider_token, dose("12345", "Covishield", 1)), registry::InvalidAadhaar);
  EXPECT_EQ(h.node->pool_size(), 0u);
}

TEST_F(NodeTest, ThreePendingMakeOneBlock) {
  for (int i = 1; i <= 3; ++i) h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", i));
  auto block = produce();
  ASSERT_TRUE(block);
  EXPECT_EQ(block->transactions.size(), 3u);
  EXPECT_EQ(h.node->pool_size(), 0u);
  EXPECT_EQ(block->header.state_root, h.node->state_root());
  EXPECT_EQ(block->header.height, h.node->height());
}

TEST_F(NodeTest, TxFailingAtApplyIsDroppedAndLogged) {
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1));
  // Nonce 1 was used by the accepted record above, so this cannot apply.
  const auto key = registry::subject_key(vt::make_aadhaar("55555555555"), h.node->state()->chain_salt);
  auto stale =
      registry::make_issue_record(h.provider_id, 99, {key, "Ravi Kumar", "Covaxin", 1, "2021-05-01"}, h.clock->load());
  h.node->enqueue_unchecked(stale);
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 2));
  ASSERT_EQ(h.node->pool_size(), 3u);

  auto block = produce();
  ASSERT_TRUE(block);
  EXPECT_EQ(block->transactions.size(), 2u);
  auto rejected = h.node->rejections();
  ASSERT_EQ(rejected.size(), 1u);
  EXPECT_EQ(rejected[0].tx, stale);
  EXPECT_NE(rejected[0].reason.find("BadNonce"), std::string::npos);
  EXPECT_EQ(h.node->pool_size(), 0u);
}

TEST_F(NodeTest, PoolOfOnlyFailuresProducesNoBlock) {
  const auto key = registry::subject_key(kAadhaar, h.node->state()->chain_salt);
  h.node->enqueue_unchecked(registry::make_issue_record(h.officer_id, 1, {key, "X", "Y", 1, "2021-05-01"}, 1));
  const auto height = h.node->height();
  EXPECT_FALSE(produce());
  EXPECT_EQ(h.node->height(), height);
  EXPECT_EQ(h.node->rejections().size(), 1u);
  // The pool is clean again and accepts fresh work.
  EXPECT_TRUE(h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1)).accepted);
}

TEST_F(NodeTest, PersistFailureHaltsAndKeepsPool) {
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1));
  const auto chain_file = h.config().chain_file();
  const std::string saved = slurp(chain_file);
  std::filesystem::remove(chain_file);
  std::filesystem::create_directory(chain_file);  // appends now fail with EISDIR

  const auto height = h.node->height();
  EXPECT_THROW(produce(), ledger::PersistFailure);
  EXPECT_TRUE(h.node->halted());
  EXPECT_EQ(h.node->pool_size(), 1u);
  EXPECT_EQ(h.node->height(), height);
  EXPECT_THROW(produce(), ledger::PersistFailure);

  // Operator fixes the disk and restarts: the chain is intact.
  std::filesystem::remove(chain_file);
  std::ofstream(chain_file, std::ios::binary) << saved;
  h.reopen();
  EXPECT_EQ(h.node->height(), height);
  EXPECT_FALSE(h.node->halted());
}

TEST_F(NodeTest, RestartReplaysToSameStateRoot) {
  for (int i = 1; i <= 3; ++i) {
    h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", i));
    produce();
  }
  const auto root = h.node->state_root();
  const auto head = h.node->head_id();
  h.reopen();
  EXPECT_EQ(h.node->state_root(), root);
  EXPECT_EQ(h.node->head_id(), head);
  EXPECT_EQ(h.node->head().state_root, root);
}

TEST_F(NodeTest, TornTailIsTruncatedOnRestart) {
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1));
  produce();
  const auto root = h.node->state_root();
  const auto height = h.node->height();
  const auto chain_file = h.config().chain_file();
  const auto good_size = std::filesystem::file_size(chain_file);
  h.node.reset();
  {
    std::ofstream out(chain_file, std::ios::app | std::ios::binary);
    out << R"({"header":{"height":)";
  }
  h.reopen();
  EXPECT_EQ(h.node->height(), height);
  EXPECT_EQ(h.node->state_root(), root);
  EXPECT_EQ(std::filesystem::file_size(chain_file), good_size);
  // And production carries on from there.
  h.provider_token = h.node->login(vt::kProviderEmail, vt::kProviderPassword).token_id;
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 2));
  ASSERT_TRUE(produce());
  EXPECT_FALSE(ledger::validate_chain_bytes(slurp(chain_file), h.init.producer_pubkey));
}

TEST_F(NodeTest, MidFileCorruptionRefusesToStart) {
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1));
  produce();
  const auto chain_file = h.config().chain_file();
  h.node.reset();
  std::string bytes = slurp(chain_file);
  const auto pos = bytes.find("Covishield");
  ASSERT_NE(pos, std::string::npos);
  bytes[pos] = 'c';
  std::ofstream(chain_file, std::ios::binary | std::ios::trunc) << bytes;
  EXPECT_THROW(h.reopen(), ledger::CorruptChainFile);
}

TEST_F(NodeTest, OfficerLookup) {
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1));
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 2));
  produce();
  auto found = h.node->officer_lookup(kAadhaar, h.officer_token);
  ASSERT_TRUE(found);
  EXPECT_EQ(found->verified_at_height, h.node->height());
  EXPECT_EQ(found->record.full_name, "Asha Rao");
  ASSERT_EQ(found->record.entries.size(), 2u);
  EXPECT_EQ(found->record.entries[1].hospital_name, vt::kHospital);
  EXPECT_EQ(found->record.entries[1].provider_id, h.provider_id);

  EXPECT_FALSE(h.node->officer_lookup(vt::make_aadhaar("99999999999"), h.officer_token));
  EXPECT_THROW(h.node->officer_lookup(kAadhaar, h.provider_token), auth::AuthError);
  std::string bad = kAadhaar;
  bad[11] = bad[11] == '0' ? '1' : '0';
  EXPECT_THROW(h.node->officer_lookup(bad, h.officer_token), registry::InvalidAadhaar);
  // Pending records are not visible until sealed.
  const auto other = vt::make_aadhaar("31415926535");
  h.node->submit_record(h.provider_token, dose(other, "Covaxin", 1));
  EXPECT_FALSE(h.node->officer_lookup(other, h.officer_token));
}

TEST_F(NodeTest, CredentialPayloadVerifiesOffline) {
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1));
  produce();
  const auto payload = h.node->credential_payload(kAadhaar, h.officer_token);
  EXPECT_EQ(h.node->verify_payload(payload), credential::Status::Valid);
  EXPECT_EQ(credential::verify_qr_payload(payload, h.init.credential_pubkey, h.clock->load()),
            credential::Status::Valid);
  auto c = credential::decode_qr_payload(payload);
  EXPECT_EQ(c.chain_head, h.node->head_id());
  EXPECT_EQ(h.node->credential_payload(kAadhaar, h.provider_token).substr(0, 12), "VAXLEDGER:1:");
  EXPECT_EQ(node_code([&] { h.node->credential_payload(vt::make_aadhaar("99999999999"), h.officer_token); }),
            NodeErrorCode::NotFound);

  // A year and a second later the same payload has expired.
  *h.clock += 365LL * 86400 + 1;
  EXPECT_EQ(h.node->verify_payload(payload), credential::Status::Expired);
}

TEST_F(NodeTest, NoRawAadhaarPersisted) {
  h.node->submit_record(h.provider_token, dose(kAadhaar, "Covishield", 1));
  produce();
  for (const auto& entry : std::filesystem::directory_iterator(h.config().data_dir)) {
    EXPECT_EQ(slurp(entry.path()).find(kAadhaar), std::string::npos) << entry.path();
  }
}

TEST_F(NodeTest, ConcurrentSubmissionsNeverSplit) {
  std::vector<std::string> aadhaars;
  for (int i = 0; i < 8; ++i) aadhaars.push_back(vt::make_aadhaar("7000000000" + std::to_string(i)));
  std::atomic<bool> done{false};
  std::atomic<int> accepted{0};
  std::thread producer([&] {
    while (!done) h.node->produce_block(h.clock->load());
  });
  std::vector<std::thread> submitters;
  for (int t = 0; t < 4; ++t) {
    submitters.emplace_back([&, t] {
      for (int n = 1; n <= 5; ++n) {
        for (int k = t; k < 8; k += 4) {
          h.node->submit_record(h.provider_token, dose(aadhaars[k], "Covishield", n, "Person " + std::to_string(k)));
          ++accepted;
        }
      }
    });
  }
  for (auto& s : submitters) s.join();
  done = true;
  producer.join();
  produce();

  std::size_t on_chain = 0;
  for (const auto& b : h.node->blocks(2, 100)) on_chain += b.transactions.size();
  EXPECT_EQ(on_chain, static_cast<std::size_t>(accepted.load()));
  EXPECT_EQ(accepted.load(), 40);
  EXPECT_TRUE(h.node->rejections().empty());
  EXPECT_FALSE(ledger::validate_chain_bytes(slurp(h.config().chain_file()), h.init.producer_pubkey));
  for (int k = 0; k < 8; ++k) EXPECT_EQ(h.node->officer_lookup(aadhaars[k], h.officer_token)->record.entries.size(), 5u);
}

TEST_F(NodeTest, BlocksPagingIsCapped) {
  EXPECT_EQ(h.node->blocks(0, 1000).size(), 2u);
  EXPECT_EQ(h.node->blocks(1, 1).at(0).header.height, 1u);
  EXPECT_TRUE(h.node->blocks(5, 10).empty());
}

class SyncTest : public NodeTest {
 protected:
  std::unique_ptr<node::Node> verifier() {
    return std::make_unique<node::Node>(h.verifier_config(vdir.path() / "v"), h.options());
  }

  void grow(int blocks) {
    for (int b = 0; b < blocks; ++b) {
      h.node->submit_record(h.provider_token,
                            dose(vt::make_aadhaar("8" + std::to_string(1000000000 + serial_++)), "Covishield", 1));
      produce();
    }
  }

  vt::TempDir vdir;
  int serial_ = 0;
};

TEST_F(SyncTest, FreshVerifierConverges) {
  grow(8);
  auto v = verifier();
  vt::LocalPeer peer(*h.node);
  EXPECT_EQ(v->sync_from(peer), 10u);
  EXPECT_EQ(v->head_id(), h.node->head_id());
  EXPECT_EQ(v->state_root(), h.node->state_root());
  EXPECT_EQ(v->sync_from(peer), 0u);
  grow(2);
  EXPECT_EQ(v->sync_from(peer), 2u);
  EXPECT_EQ(v->head_id(), h.node->head_id());
}

TEST_F(SyncTest, PagesThroughMoreThanOneHundredBlocks) {
  grow(110);
  auto v = verifier();
  vt::LocalPeer peer(*h.node);
  EXPECT_EQ(v->sync_from(peer), 112u);
  EXPECT_GE(peer.calls, 2u);
  EXPECT_EQ(v->head_id(), h.node->head_id());
}

TEST_F(SyncTest, VerifierPersistsAndRestarts) {
  grow(3);
  {
    auto v = verifier();
    vt::LocalPeer peer(*h.node);
    v->sync_from(peer);
  }
  auto v = verifier();
  EXPECT_EQ(v->head_id(), h.node->head_id());
  EXPECT_EQ(v->state_root(), h.node->state_root());
}

TEST_F(SyncTest, BadSignatureRejectedAndNothingPersisted) {
  grow(5);
  auto v = verifier();
  vt::LocalPeer peer(*h.node);
  peer.corrupt = [](std::uint64_t height, codec::Value& b) {
    if (height != 4) return;
    auto& header = b.as_map().at("header").as_map();
    std::string sig = header.at("signature").as_text();
    sig[0] = sig[0] == '0' ? '1' : '0';
    header["signature"] = sig;
  };
  try {
    v->sync_from(peer);
    FAIL() << "accepted a forged block";
  } catch (const NodeError& e) {
    EXPECT_EQ(e.code(), NodeErrorCode::InvalidBlockFromPeer);
    ASSERT_TRUE(e.chain_error());
    EXPECT_EQ(e.chain_error()->code, ledger::ChainErrorCode::BadSignature);
    EXPECT_EQ(e.chain_error()->height, 4u);
  }
  EXPECT_THROW(v->head(), NodeError);  // still empty
  EXPECT_FALSE(std::filesystem::exists(v->config().chain_file()) &&
               std::filesystem::file_size(v->config().chain_file()) > 0);
}

TEST_F(SyncTest, TamperedTransactionRejectedAtItsHeight) {
  grow(5);
  auto v = verifier();
  vt::LocalPeer honest(*h.node);
  ASSERT_EQ(v->sync_from(honest), 7u);
  grow(3);
  const auto head_before = v->head_id();
  vt::LocalPeer peer(*h.node);
  peer.corrupt = [](std::uint64_t height, codec::Value& b) {
    if (height != 9) return;
    auto& tx = b.as_map().at("transactions").as_list().at(0).as_map();
    tx["payload"].as_map()["full_name"] = "Mallory";
  };
  try {
    v->sync_from(peer);
    FAIL();
  } catch (const NodeError& e) {
    EXPECT_EQ(e.chain_error()->code, ledger::ChainErrorCode::BadTxRoot);
    EXPECT_EQ(e.chain_error()->height, 9u);
  }
  EXPECT_EQ(v->head_id(), head_before);
  EXPECT_EQ(v->height(), 6u);
}

TEST_F(SyncTest, VerifierRefusesWrites) {
  auto v = verifier();
  vt::LocalPeer peer(*h.node);
  v->sync_from(peer);
  EXPECT_EQ(node_code([&] { h.node->sync_from(peer); }), NodeErrorCode::WrongMode);
  EXPECT_EQ(node_code([&] { v->produce_block(1); }), NodeErrorCode::WrongMode);
  EXPECT_THROW(v->credential_payload(kAadhaar, "x"), auth::AuthError);
  // An officer account on the verifier still gets no credential: no signing key.
  v->auth().bootstrap_authority("authority", "admin@verifier.in", "Verifier-Pass-01");
  const auto token = v->login("admin@verifier.in", "Verifier-Pass-01").token_id;
  EXPECT_TRUE(v->officer_lookup(kAadhaar, token) == std::nullopt);
  EXPECT_EQ(node_code([&] { v->credential_payload(kAadhaar, token); }), NodeErrorCode::Unavailable);
}

TEST_F(SyncTest, UnreachablePeer) {
  auto v = verifier();
  EXPECT_EQ(node_code([&] { v->sync_from_peer("http://127.0.0.1:1"); }), NodeErrorCode::PeerUnreachable);
}
