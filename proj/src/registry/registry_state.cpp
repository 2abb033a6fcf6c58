#include "vaxledger/registry_state.hpp"

#include "vaxledger/merkle.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace vaxledger::registry {

namespace {

constexpr std::size_t kMaxTextLen = 256;

[[noreturn]] void reject(TxErrorCode code, const std::string& detail) { throw TxError(code, detail); }

const std::string& payload_text(const codec::Map& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end() || !it->second.is_text()) reject(TxErrorCode::MalformedPayload, "field '" + key + "' must be text");
  const auto& s = it->second.as_text();
  if (s.empty() || s.size() > kMaxTextLen) {
    reject(TxErrorCode::MalformedPayload, "field '" + key + "' must be 1.." + std::to_string(kMaxTextLen) + " bytes");
  }
  return s;
}

void payload_keys(const codec::Map& p, std::initializer_list<std::string_view> keys) {
  try {
    codec::expect_keys(p, keys);
  } catch (const codec::SchemaError& e) {
    reject(TxErrorCode::MalformedPayload, e.what());
  }
}

bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  auto digits = [&](std::size_t from, std::size_t n) {
    int v = 0;
    for (std::size_t i = from; i < from + n; ++i) {
      if (s[i] < '0' || s[i] > '9') return -1;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  int y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (y < 0 || m < 0 || d < 0) return false;
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  return ymd.ok();
}

bool entry_less(const VaccinationEntry& a, const VaccinationEntry& b) {
  return std::tie(a.vaccine_name, a.dose_number) < std::tie(b.vaccine_name, b.dose_number);
}

void check_nonce(const RegistryState& state, const Transaction& tx) {
  auto it = state.nonces.find(tx.actor_id);
  std::int64_t expected = it == state.nonces.end() ? 1 : it->second + 1;
  if (tx.nonce != expected) {
    reject(TxErrorCode::BadNonce, "expected nonce " + std::to_string(expected) + " for '" + tx.actor_id + "', got " +
                                      std::to_string(tx.nonce));
  }
}

void require_role(const RegistryState& state, const Transaction& tx, Role role) {
  auto it = state.accounts_roles.find(tx.actor_id);
  if (it == state.accounts_roles.end() || it->second != role) {
    reject(TxErrorCode::Unauthorized,
           "actor '" + tx.actor_id + "' may not submit " + std::string(to_string(tx.kind)));
  }
}

void apply_bootstrap(RegistryState& state, const Transaction& tx) {
  if (state.bootstrapped() || !state.accounts_roles.empty() || !state.nonces.empty()) {
    reject(TxErrorCode::BootstrapOutsideGenesis, "bootstrap is only valid in the genesis block");
  }
  check_nonce(state, tx);
  payload_keys(tx.payload, {"authorities", "chain_salt"});
  const auto& salt_v = tx.payload.at("chain_salt");
  const auto& auth_v = tx.payload.at("authorities");
  if (!salt_v.is_text() || salt_v.as_text().empty() || !codec::is_lower_hex(salt_v.as_text(), salt_v.as_text().size()) ||
      salt_v.as_text().size() % 2 != 0) {
    reject(TxErrorCode::MalformedPayload, "chain_salt must be non-empty lowercase hex");
  }
  if (!auth_v.is_list() || auth_v.as_list().empty()) {
    reject(TxErrorCode::MalformedPayload, "authorities must be a non-empty list");
  }
  std::vector<std::string> ids;
  for (const auto& a : auth_v.as_list()) {
    if (!a.is_map()) reject(TxErrorCode::MalformedPayload, "authority entry must be a map");
    payload_keys(a.as_map(), {"account_id", "pubkey"});
    const auto& id = payload_text(a.as_map(), "account_id");
    const auto& pk = payload_text(a.as_map(), "pubkey");
    if (!codec::is_lower_hex(pk, 64)) reject(TxErrorCode::MalformedPayload, "authority pubkey must be 64 hex");
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
      reject(TxErrorCode::DuplicateRegistration, "authority '" + id + "' listed twice");
    }
    ids.push_back(id);
  }

  state.chain_salt = codec::from_hex(salt_v.as_text());
  for (auto& id : ids) state.accounts_roles.emplace(std::move(id), Role::Authority);
  state.nonces[tx.actor_id] = tx.nonce;
}

void apply_registration(RegistryState& state, const Transaction& tx) {
  require_role(state, tx, Role::Authority);
  check_nonce(state, tx);
  std::string id;
  std::optional<std::string> hospital;
  if (tx.kind == TxKind::RegisterProvider) {
    payload_keys(tx.payload, {"hospital_name", "provider_id"});
    id = payload_text(tx.payload, "provider_id");
    hospital = payload_text(tx.payload, "hospital_name");
  } else {
    payload_keys(tx.payload, {"officer_id"});
    id = payload_text(tx.payload, "officer_id");
  }
  if (state.accounts_roles.contains(id)) reject(TxErrorCode::DuplicateRegistration, "'" + id + "' already registered");

  state.accounts_roles.emplace(id, hospital ? Role::Provider : Role::Officer);
  if (hospital) state.hospitals.emplace(id, *hospital);
  state.nonces[tx.actor_id] = tx.nonce;
}

void apply_issue(RegistryState& state, const Transaction& tx) {
  require_role(state, tx, Role::Provider);
  check_nonce(state, tx);
  payload_keys(tx.payload, {"date", "dose_number", "full_name", "subject_key", "vaccine_name"});
  const auto& key_hex = payload_text(tx.payload, "subject_key");
  if (!codec::is_lower_hex(key_hex, 64)) reject(TxErrorCode::MalformedPayload, "subject_key must be 64 lowercase hex");
  const auto& dose_v = tx.payload.at("dose_number");
  if (!dose_v.is_int() || dose_v.as_int() < 1) reject(TxErrorCode::MalformedPayload, "dose_number must be >= 1");
  const auto& date = payload_text(tx.payload, "date");
  if (!is_iso_date(date)) reject(TxErrorCode::MalformedPayload, "date must be a valid YYYY-MM-DD date");

  VaccinationEntry entry{payload_text(tx.payload, "vaccine_name"), dose_v.as_int(), date,
                         state.hospitals.at(tx.actor_id), tx.actor_id};
  const auto& full_name = payload_text(tx.payload, "full_name");

  auto it = state.records.find(key_hex);
  if (it != state.records.end()) {
    const PassportRecord& rec = it->second;
    if (rec.full_name != full_name) reject(TxErrorCode::NameMismatch, "full_name differs from the existing record");
    auto pos = std::lower_bound(rec.entries.begin(), rec.entries.end(), entry, entry_less);
    if (pos != rec.entries.end() && !entry_less(entry, *pos)) {
      reject(TxErrorCode::DuplicateDose,
             "dose " + std::to_string(entry.dose_number) + " of '" + entry.vaccine_name + "' already recorded");
    }
  }

  // All checks passed; mutate.
  if (it == state.records.end()) {
    PassportRecord rec{codec::Digest32::from_hex(key_hex), full_name, {}};
    it = state.records.emplace(key_hex, std::move(rec)).first;
  }
  auto& entries = it->second.entries;
  entries.insert(std::lower_bound(entries.begin(), entries.end(), entry, entry_less), std::move(entry));
  state.nonces[tx.actor_id] = tx.nonce;
}

}  // namespace

std::string_view to_string(TxErrorCode c) {
  switch (c) {
    case TxErrorCode::Unauthorized: return "Unauthorized";
    case TxErrorCode::BadNonce: return "BadNonce";
    case TxErrorCode::DuplicateDose: return "DuplicateDose";
    case TxErrorCode::NameMismatch: return "NameMismatch";
    case TxErrorCode::DuplicateRegistration: return "DuplicateRegistration";
    case TxErrorCode::MalformedPayload: return "MalformedPayload";
    case TxErrorCode::BootstrapOutsideGenesis: return "BootstrapOutsideGenesis";
  }
  return "Unknown";
}

TxError::TxError(TxErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

codec::Value VaccinationEntry::to_value() const {
  return codec::Map{
      {"date", date},
      {"dose_number", dose_number},
      {"hospital_name", hospital_name},
      {"provider_id", provider_id},
      {"vaccine_name", vaccine_name},
  };
}

VaccinationEntry VaccinationEntry::from_value(const codec::Value& v) {
  const auto& m = v.as_map();
  codec::expect_keys(m, {"date", "dose_number", "hospital_name", "provider_id", "vaccine_name"});
  VaccinationEntry e{codec::field(m, "vaccine_name").as_text(), codec::field(m, "dose_number").as_int(),
                     codec::field(m, "date").as_text(), codec::field(m, "hospital_name").as_text(),
                     codec::field(m, "provider_id").as_text()};
  if (e.dose_number < 1) throw codec::SchemaError("dose_number must be >= 1");
  return e;
}

codec::Value PassportRecord::to_value() const {
  codec::List list;
  for (const auto& e : entries) list.push_back(e.to_value());
  return codec::Map{{"entries", std::move(list)}, {"full_name", full_name}, {"subject_key", subject_key.hex()}};
}

PassportRecord PassportRecord::from_value(const codec::Value& v) {
  const auto& m = v.as_map();
  codec::expect_keys(m, {"entries", "full_name", "subject_key"});
  PassportRecord r;
  r.subject_key = Digest32::from_hex(codec::field(m, "subject_key").as_text());
  r.full_name = codec::field(m, "full_name").as_text();
  for (const auto& e : codec::field(m, "entries").as_list()) r.entries.push_back(VaccinationEntry::from_value(e));
  return r;
}

bool is_valid_aadhaar(std::string_view aadhaar) { return aadhaar.size() == 12 && codec::verhoeff_validate(aadhaar); }

Digest32 subject_key(std::string_view aadhaar, const codec::Bytes& chain_salt) {
  if (!is_valid_aadhaar(aadhaar)) throw InvalidAadhaar();
  std::string buf(chain_salt.begin(), chain_salt.end());
  buf.append(aadhaar);
  return codec::hash_sha256(buf);
}

void apply_tx_in_place(RegistryState& state, const Transaction& tx) {
  // Each handler validates fully before its first write.
  switch (tx.kind) {
    case TxKind::Bootstrap:
      apply_bootstrap(state, tx);
      break;
    case TxKind::RegisterProvider:
    case TxKind::RegisterOfficer:
      apply_registration(state, tx);
      break;
    case TxKind::IssueRecord:
      apply_issue(state, tx);
      break;
  }
}

RegistryState apply_tx(const RegistryState& state, const Transaction& tx) {
  RegistryState next = state;
  apply_tx_in_place(next, tx);
  return next;
}

std::optional<PassportRecord> lookup_record(const RegistryState& state, const Digest32& key) {
  auto it = state.records.find(key.hex());
  if (it == state.records.end()) return std::nullopt;
  return it->second;
}

std::vector<codec::Value> state_leaf_values(const RegistryState& state) {
  std::vector<codec::Value> out;
  for (const auto& [id, role] : state.accounts_roles) out.emplace_back(codec::List{"accounts_roles", id, to_string(role)});
  for (const auto& [id, name] : state.hospitals) out.emplace_back(codec::List{"hospitals", id, name});
  for (const auto& [key, rec] : state.records) out.emplace_back(codec::List{"records", key, rec.to_value()});
  for (const auto& [id, n] : state.nonces) out.emplace_back(codec::List{"nonces", id, n});
  if (!state.chain_salt.empty()) out.emplace_back(codec::List{"chain_salt", "", state.chain_salt});
  return out;
}

Digest32 state_root(const RegistryState& state) {
  std::vector<std::string> encoded;
  for (const auto& v : state_leaf_values(state)) encoded.push_back(codec::encode_canonical(v));
  std::sort(encoded.begin(), encoded.end());
  std::vector<Digest32> leaves;
  leaves.reserve(encoded.size());
  for (const auto& e : encoded) leaves.push_back(codec::hash_sha256(e));
  return ledger::merkle_root(leaves);
}

}  // namespace vaxledger::registry
