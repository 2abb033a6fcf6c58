#include "vaxledger/transaction.hpp"

#include <array>
#include <utility>

namespace vaxledger::registry {

namespace {

constexpr std::array<std::pair<Role, std::string_view>, 3> kRoleNames{{
    {Role::Authority, "AUTHORITY"},
    {Role::Provider, "PROVIDER"},
    {Role::Officer, "OFFICER"},
}};

constexpr std::array<std::pair<TxKind, std::string_view>, 4> kKindNames{{
    {TxKind::RegisterProvider, "REGISTER_PROVIDER"},
    {TxKind::RegisterOfficer, "REGISTER_OFFICER"},
    {TxKind::IssueRecord, "ISSUE_RECORD"},
    {TxKind::Bootstrap, "BOOTSTRAP"},
}};

}  // namespace

std::string_view to_string(Role r) {
  for (auto [role, name] : kRoleNames) {
    if (role == r) return name;
  }
  return "UNKNOWN";
}

std::string_view to_string(TxKind k) {
  for (auto [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "UNKNOWN";
}

std::optional<Role> parse_role(std::string_view s) {
  for (auto [role, name] : kRoleNames) {
    if (name == s) return role;
  }
  return std::nullopt;
}

std::optional<TxKind> parse_tx_kind(std::string_view s) {
  for (auto [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

codec::Value Transaction::to_value() const {
  return codec::Map{
      {"actor_id", actor_id},
      {"kind", to_string(kind)},
      {"nonce", nonce},
      {"payload", payload},
      {"submitted_at", submitted_at},
  };
}

Transaction Transaction::from_value(const codec::Value& v) {
  const auto& m = v.as_map();
  codec::expect_keys(m, {"actor_id", "kind", "nonce", "payload", "submitted_at"});
  Transaction tx;
  auto kind = parse_tx_kind(codec::field(m, "kind").as_text());
  if (!kind) throw codec::SchemaError("unknown transaction kind");
  tx.kind = *kind;
  tx.actor_id = codec::field(m, "actor_id").as_text();
  tx.nonce = codec::field(m, "nonce").as_int();
  if (tx.nonce < 0) throw codec::SchemaError("nonce must be non-negative");
  tx.payload = codec::field(m, "payload").as_map();
  tx.submitted_at = codec::field(m, "submitted_at").as_int();
  return tx;
}

Digest32 Transaction::leaf_hash() const { return codec::hash_sha256(codec::encode_canonical(to_value())); }

Transaction make_bootstrap(std::string actor_id, const codec::Bytes& chain_salt,
                           const std::vector<AuthorityIdentity>& authorities, std::int64_t submitted_at) {
  codec::List auths;
  for (const auto& a : authorities) {
    auths.emplace_back(codec::Map{{"account_id", a.account_id}, {"pubkey", a.public_key.hex()}});
  }
  return Transaction{TxKind::Bootstrap,
                     std::move(actor_id),
                     1,
                     codec::Map{{"authorities", std::move(auths)}, {"chain_salt", codec::to_hex(chain_salt)}},
                     submitted_at};
}

Transaction make_register_provider(std::string actor_id, std::int64_t nonce, std::string provider_id,
                                   std::string hospital_name, std::int64_t submitted_at) {
  return Transaction{TxKind::RegisterProvider, std::move(actor_id), nonce,
                     codec::Map{{"hospital_name", std::move(hospital_name)}, {"provider_id", std::move(provider_id)}},
                     submitted_at};
}

Transaction make_register_officer(std::string actor_id, std::int64_t nonce, std::string officer_id,
                                  std::int64_t submitted_at) {
  return Transaction{TxKind::RegisterOfficer, std::move(actor_id), nonce,
                     codec::Map{{"officer_id", std::move(officer_id)}}, submitted_at};
}

Transaction make_issue_record(std::string actor_id, std::int64_t nonce, const IssueRecordRequest& request,
                              std::int64_t submitted_at) {
  return Transaction{TxKind::IssueRecord, std::move(actor_id), nonce,
                     codec::Map{
                         {"date", request.date},
                         {"dose_number", request.dose_number},
                         {"full_name", request.full_name},
                         {"subject_key", request.subject_key.hex()},
                         {"vaccine_name", request.vaccine_name},
                     },
                     submitted_at};
}

std::optional<Role> required_role(TxKind kind) {
  switch (kind) {
    case TxKind::RegisterProvider:
    case TxKind::RegisterOfficer:
      return Role::Authority;
    case TxKind::IssueRecord:
      return Role::Provider;
    case TxKind::Bootstrap:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace vaxledger::registry
