#include "fixtures.hpp"

#include "oracles.hpp"

#include <unistd.h>

#include <atomic>
#include <random>

namespace vaxledger::testing {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("vaxledger-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

crypto::SigningKey key_from_label(std::string_view label) {
  auto seed = openssl_sha256(label);
  return crypto::SigningKey::from_seed(seed);
}

ChainFixture::ChainFixture()
    : signer{"authority-node", key_from_label("producer")},
      credential_key(key_from_label("credential")),
      salt(16, 0x5a) {
  blocks.push_back(ledger::make_genesis(salt, {{kAuthority, credential_key.public_key()}}, signer, clock));
  state = registry::replay(blocks);
  nonces_[signer.producer_id] = 1;
}

std::int64_t ChainFixture::next_nonce(const std::string& actor) { return ++nonces_[actor]; }

registry::Transaction ChainFixture::register_provider(const std::string& provider_id, const std::string& hospital) {
  return registry::make_register_provider(kAuthority, next_nonce(kAuthority), provider_id, hospital, clock);
}

registry::Transaction ChainFixture::register_officer(const std::string& officer_id) {
  return registry::make_register_officer(kAuthority, next_nonce(kAuthority), officer_id, clock);
}

registry::Transaction ChainFixture::issue(const std::string& provider_id, const std::string& aadhaar,
                                          const std::string& name, const std::string& vaccine, std::int64_t dose,
                                          const std::string& date) {
  registry::IssueRecordRequest req{registry::subject_key(aadhaar, salt), name, vaccine, dose, date};
  return registry::make_issue_record(provider_id, next_nonce(provider_id), req, clock);
}

const ledger::Block& ChainFixture::commit(std::vector<registry::Transaction> txs) {
  for (const auto& tx : txs) state = registry::apply_tx(state, tx);
  clock += 5;
  blocks.push_back(ledger::append_block(blocks.back().header, std::move(txs), registry::state_root(state), signer, clock));
  return blocks.back();
}

void ChainFixture::grow_random(std::size_t total_blocks, std::size_t txs_per_block, std::uint32_t seed) {
  std::mt19937 rng(seed);
  const std::vector<std::string> providers = {"prov-a", "prov-b", "prov-c"};
  if (!state.accounts_roles.contains(providers[0])) {
    commit({register_provider(providers[0], "St. Mary"), register_provider(providers[1], "City General"),
            register_provider(providers[2], "Lakeside Clinic"), register_officer("officer-1")});
  }
  std::map<std::pair<std::string, std::string>, std::int64_t> doses;  // (aadhaar, vaccine) -> last dose
  std::map<std::string, std::string> names;
  const std::vector<std::string> vaccines = {"Covishield", "Covaxin", "Sputnik V"};
  std::uint64_t serial = seed * 1000ull;
  while (blocks.size() < total_blocks) {
    std::vector<registry::Transaction> txs;
    for (std::size_t i = 0; i < txs_per_block; ++i) {
      std::string body = std::to_string(20000000000ull + (serial++ % 37) * 7919);
      std::string aadhaar = make_aadhaar(body.substr(0, 11));
      const auto& vaccine = vaccines[rng() % vaccines.size()];
      auto& dose = doses[{aadhaar, vaccine}];
      auto [it, _] = names.emplace(aadhaar, "Traveler " + aadhaar.substr(8));
      txs.push_back(issue(providers[rng() % providers.size()], aadhaar, it->second, vaccine, ++dose, "2021-06-15"));
    }
    commit(std::move(txs));
  }
}

std::string ChainFixture::chain_bytes() const {
  std::string out;
  for (const auto& b : blocks) {
    out += codec::encode_canonical(b.to_value());
    out.push_back('\n');
  }
  return out;
}

}  // namespace vaxledger::testing
