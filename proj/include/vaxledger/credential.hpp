#pragma once

// Offline-verifiable vaccination credentials. Depends only on codec, crypto
// and the record types; nothing here touches the ledger or the node.

#include "vaxledger/codec.hpp"
#include "vaxledger/crypto.hpp"
#include "vaxledger/registry_state.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vaxledger::credential {

using codec::Digest32;

inline constexpr std::int64_t kVersion = 1;
inline constexpr std::string_view kQrPrefix = "VAXLEDGER:1:";
inline constexpr std::int64_t kDefaultValiditySeconds = 365LL * 24 * 60 * 60;

struct Credential {
  std::int64_t version = kVersion;
  Digest32 subject_key;
  std::string full_name;
  std::vector<registry::VaccinationEntry> entries;
  std::int64_t issued_at = 0;
  Digest32 chain_head;
  crypto::Signature signature{};

  codec::Value to_value() const;
  std::string signing_bytes() const;
  static Credential from_value(const codec::Value& v);  // throws codec::SchemaError

  friend bool operator==(const Credential&, const Credential&) = default;
};

class EmptyRecord : public std::invalid_argument {
 public:
  EmptyRecord() : std::invalid_argument("cannot issue a credential for a record without entries") {}
};

Credential issue_credential(const registry::PassportRecord& record, const Digest32& chain_head,
                            const crypto::SigningKey& authority_key, std::int64_t issued_at);

std::string encode_qr_payload(const Credential& c);

enum class QrErrorCode { BadPrefix, BadBase64, BadSchema };

class QrDecodeError : public std::runtime_error {
 public:
  QrDecodeError(QrErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  QrErrorCode code() const { return code_; }

 private:
  QrErrorCode code_;
};

// Parses only; the signature is not checked.
Credential decode_qr_payload(std::string_view text);

enum class Status { Valid, InvalidSignature, Expired, Malformed };

std::string_view to_string(Status s);

// Expiry is inclusive: a credential is still valid at exactly issued_at + validity.
Status verify_credential(const Credential& c, const crypto::PublicKey& authority_key, std::int64_t now,
                         std::int64_t validity_seconds = kDefaultValiditySeconds);

// decode + verify; any decode failure is Malformed.
Status verify_qr_payload(std::string_view text, const crypto::PublicKey& authority_key, std::int64_t now,
                         std::int64_t validity_seconds = kDefaultValiditySeconds);

}  // namespace vaxledger::credential
