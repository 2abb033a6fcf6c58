#include "vaxledger/credential.hpp"

namespace vaxledger::credential {

namespace {

codec::Map unsigned_fields(const Credential& c) {
  codec::List entries;
  for (const auto& e : c.entries) entries.push_back(e.to_value());
  return codec::Map{
      {"chain_head", c.chain_head.hex()},
      {"entries", std::move(entries)},
      {"full_name", c.full_name},
      {"issued_at", c.issued_at},
      {"subject_key", c.subject_key.hex()},
      {"version", c.version},
  };
}

}  // namespace

codec::Value Credential::to_value() const {
  auto m = unsigned_fields(*this);
  m.emplace("signature", codec::to_hex(signature));
  return m;
}

std::string Credential::signing_bytes() const { return codec::encode_canonical(unsigned_fields(*this)); }

Credential Credential::from_value(const codec::Value& v) {
  const auto& m = v.as_map();
  codec::expect_keys(m, {"chain_head", "entries", "full_name", "issued_at", "signature", "subject_key", "version"});
  Credential c;
  c.version = codec::field(m, "version").as_int();
  c.subject_key = Digest32::from_hex(codec::field(m, "subject_key").as_text());
  c.full_name = codec::field(m, "full_name").as_text();
  for (const auto& e : codec::field(m, "entries").as_list()) c.entries.push_back(registry::VaccinationEntry::from_value(e));
  c.issued_at = codec::field(m, "issued_at").as_int();
  c.chain_head = Digest32::from_hex(codec::field(m, "chain_head").as_text());
  const auto& sig = codec::field(m, "signature").as_text();
  if (!codec::is_lower_hex(sig, 128)) throw codec::SchemaError("signature must be 128 lowercase hex characters");
  auto raw = codec::from_hex(sig);
  std::copy(raw.begin(), raw.end(), c.signature.begin());
  return c;
}

Credential issue_credential(const registry::PassportRecord& record, const Digest32& chain_head,
                            const crypto::SigningKey& authority_key, std::int64_t issued_at) {
  if (record.entries.empty()) throw EmptyRecord();
  Credential c;
  c.subject_key = record.subject_key;
  c.full_name = record.full_name;
  c.entries = record.entries;
  c.issued_at = issued_at;
  c.chain_head = chain_head;
  c.signature = authority_key.sign(c.signing_bytes());
  return c;
}

std::string encode_qr_payload(const Credential& c) {
  const std::string body = codec::encode_canonical(c.to_value());
  return std::string(kQrPrefix) +
         codec::base64url_encode(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

Credential decode_qr_payload(std::string_view text) {
  if (!text.starts_with(kQrPrefix)) throw QrDecodeError(QrErrorCode::BadPrefix, "payload must start with VAXLEDGER:1:");
  auto raw = codec::base64url_decode(text.substr(kQrPrefix.size()));
  if (!raw || raw->empty()) throw QrDecodeError(QrErrorCode::BadBase64, "payload body is not valid unpadded base64url");
  try {
    return Credential::from_value(codec::decode_canonical(std::string_view(reinterpret_cast<const char*>(raw->data()), raw->size())));
  } catch (const std::exception& e) {
    throw QrDecodeError(QrErrorCode::BadSchema, std::string("credential body: ") + e.what());
  }
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Valid: return "VALID";
    case Status::InvalidSignature: return "INVALID_SIGNATURE";
    case Status::Expired: return "EXPIRED";
    case Status::Malformed: return "MALFORMED";
  }
  return "MALFORMED";
}

Status verify_credential(const Credential& c, const crypto::PublicKey& authority_key, std::int64_t now,
                         std::int64_t validity_seconds) {
  if (c.version != kVersion || c.entries.empty() || c.full_name.empty()) return Status::Malformed;
  std::string message;
  try {
    message = c.signing_bytes();
  } catch (const codec::UnsupportedValue&) {
    return Status::Malformed;
  }
  if (!crypto::verify(authority_key, message, c.signature)) return Status::InvalidSignature;
  if (now - c.issued_at > validity_seconds) return Status::Expired;
  return Status::Valid;
}

Status verify_qr_payload(std::string_view text, const crypto::PublicKey& authority_key, std::int64_t now,
                         std::int64_t validity_seconds) {
  try {
    return verify_credential(decode_qr_payload(text), authority_key, now, validity_seconds);
  } catch (const QrDecodeError&) {
    return Status::Malformed;
  }
}

}  // namespace vaxledger::credential
