#pragma once

#include "vaxledger/codec.hpp"
#include "vaxledger/crypto.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vaxledger::registry {

using codec::Digest32;

enum class Role { Authority, Provider, Officer };

enum class TxKind { RegisterProvider, RegisterOfficer, IssueRecord, Bootstrap };

std::string_view to_string(Role r);
std::string_view to_string(TxKind k);
std::optional<Role> parse_role(std::string_view s);
std::optional<TxKind> parse_tx_kind(std::string_view s);

// Wire form: {"actor_id","kind","nonce","payload","submitted_at"}.
struct Transaction {
  TxKind kind = TxKind::IssueRecord;
  std::string actor_id;
  std::int64_t nonce = 0;
  codec::Map payload;
  std::int64_t submitted_at = 0;

  codec::Value to_value() const;
  static Transaction from_value(const codec::Value& v);  // throws codec::SchemaError

  // sha256 of the canonical encoding; the Merkle leaf for tx_root.
  Digest32 leaf_hash() const;

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

struct AuthorityIdentity {
  std::string account_id;
  crypto::PublicKey public_key;
};

struct IssueRecordRequest {
  Digest32 subject_key;
  std::string full_name;
  std::string vaccine_name;
  std::int64_t dose_number = 0;
  std::string date;
};

Transaction make_bootstrap(std::string actor_id, const codec::Bytes& chain_salt,
                           const std::vector<AuthorityIdentity>& authorities, std::int64_t submitted_at);
Transaction make_register_provider(std::string actor_id, std::int64_t nonce, std::string provider_id,
                                   std::string hospital_name, std::int64_t submitted_at);
Transaction make_register_officer(std::string actor_id, std::int64_t nonce, std::string officer_id,
                                  std::int64_t submitted_at);
Transaction make_issue_record(std::string actor_id, std::int64_t nonce, const IssueRecordRequest& request,
                              std::int64_t submitted_at);

// The role an actor must hold to submit a transaction of this kind.
std::optional<Role> required_role(TxKind kind);

}  // namespace vaxledger::registry
