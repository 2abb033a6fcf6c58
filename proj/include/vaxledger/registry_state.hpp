#pragma once

#include "vaxledger/codec.hpp"
#include "vaxledger/transaction.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vaxledger::registry {

struct VaccinationEntry {
  std::string vaccine_name;
  std::int64_t dose_number = 0;
  std::string date;  // YYYY-MM-DD
  std::string hospital_name;
  std::string provider_id;

  codec::Value to_value() const;
  static VaccinationEntry from_value(const codec::Value& v);

  friend bool operator==(const VaccinationEntry&, const VaccinationEntry&) = default;
};

// Entries stay sorted by (vaccine_name, dose_number).
struct PassportRecord {
  Digest32 subject_key;
  std::string full_name;
  std::vector<VaccinationEntry> entries;

  codec::Value to_value() const;
  static PassportRecord from_value(const codec::Value& v);

  friend bool operator==(const PassportRecord&, const PassportRecord&) = default;
};

struct RegistryState {
  std::map<std::string, Role> accounts_roles;
  std::map<std::string, std::string> hospitals;
  std::map<std::string, PassportRecord> records;  // keyed by subject_key hex
  std::map<std::string, std::int64_t> nonces;
  codec::Bytes chain_salt;

  bool bootstrapped() const { return !chain_salt.empty(); }

  friend bool operator==(const RegistryState&, const RegistryState&) = default;
};

enum class TxErrorCode {
  Unauthorized,
  BadNonce,
  DuplicateDose,
  NameMismatch,
  DuplicateRegistration,
  MalformedPayload,
  BootstrapOutsideGenesis,
};

std::string_view to_string(TxErrorCode c);

class TxError : public std::runtime_error {
 public:
  TxError(TxErrorCode code, const std::string& detail);
  TxErrorCode code() const { return code_; }

 private:
  TxErrorCode code_;
};

class InvalidAadhaar : public std::invalid_argument {
 public:
  InvalidAadhaar() : std::invalid_argument("aadhaar must be 12 digits with a valid Verhoeff check digit") {}
};

bool is_valid_aadhaar(std::string_view aadhaar);

// sha256(chain_salt || aadhaar). Throws InvalidAadhaar.
Digest32 subject_key(std::string_view aadhaar, const codec::Bytes& chain_salt);

// Returns the successor state; `state` is untouched. Throws TxError.
RegistryState apply_tx(const RegistryState& state, const Transaction& tx);

// In-place variant with the strong exception guarantee: on TxError `state` is
// unchanged.
void apply_tx_in_place(RegistryState& state, const Transaction& tx);

std::optional<PassportRecord> lookup_record(const RegistryState& state, const Digest32& key);

// One [section, key, value] triple per map entry, as canonical values.
std::vector<codec::Value> state_leaf_values(const RegistryState& state);

Digest32 state_root(const RegistryState& state);

}  // namespace vaxledger::registry
