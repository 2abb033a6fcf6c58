#pragma once

#include "vaxledger/codec.hpp"
#include "vaxledger/transaction.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace vaxledger::auth {

using registry::Role;

// Argon2id cost parameters, stored per account so they can be raised later
// without invalidating existing hashes.
struct KdfParams {
  std::string algorithm = "argon2id13";
  std::uint64_t opslimit = 0;
  std::uint64_t memlimit = 0;

  static KdfParams interactive();
  // libsodium's minimum costs; for tests only.
  static KdfParams minimal();

  codec::Value to_value() const;
  static KdfParams from_value(const codec::Value& v);

  friend bool operator==(const KdfParams&, const KdfParams&) = default;
};

struct Account {
  std::string account_id;
  std::string email;
  codec::Bytes password_hash;
  codec::Bytes salt;
  KdfParams kdf;
  Role role = Role::Officer;
  std::optional<std::string> hospital_name;

  codec::Value to_value() const;
  static Account from_value(const codec::Value& v);

  friend bool operator==(const Account&, const Account&) = default;
};

struct SessionToken {
  std::string token_id;  // 64 hex characters
  std::string account_id;
  Role role = Role::Officer;
  std::int64_t issued_at = 0;
  std::int64_t expires_at = 0;
};

enum class AuthErrorCode {
  Forbidden,
  EmailTaken,
  WeakPassword,
  MissingHospital,
  InvalidEmail,
  InvalidRole,
  InvalidCredentials,
  TokenExpired,
  TokenUnknown,
};

std::string_view to_string(AuthErrorCode c);

class AuthError : public std::runtime_error {
 public:
  explicit AuthError(AuthErrorCode code);
  AuthError(AuthErrorCode code, const std::string& detail);
  AuthErrorCode code() const { return code_; }

 private:
  AuthErrorCode code_;
};

inline constexpr std::int64_t kDefaultSessionLifetime = 8 * 60 * 60;
inline constexpr std::size_t kMinPasswordLength = 10;

struct AuthOptions {
  KdfParams kdf = KdfParams::interactive();
  std::int64_t session_lifetime = kDefaultSessionLifetime;
  std::function<std::int64_t()> clock;  // unix seconds; defaults to the system clock
};

// Stable, role-prefixed identifier derived from the (normalized) email.
std::string account_id_for(Role role, std::string_view email);

// Lowercases and trims; throws AuthError(InvalidEmail) if not of the form
// local@domain.tld.
std::string normalize_email(std::string_view email);

codec::Bytes derive_password_hash(std::string_view password, const codec::Bytes& salt, const KdfParams& kdf);

// JSON-lines file of canonical account encodings, mode 0600.
class AccountStore {
 public:
  explicit AccountStore(std::filesystem::path path);
  std::vector<Account> load() const;
  void append(const Account& account);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class AuthService {
 public:
  AuthService(std::filesystem::path accounts_file, AuthOptions options = {});

  // Called after validation and hashing but before the account is stored. If
  // it throws, the account is discarded and the exception propagates.
  using RegistrationHook = std::function<void(const Account&)>;

  // Creates the initial AUTHORITY account without an acting session.
  Account bootstrap_authority(std::string_view account_id, std::string_view email, std::string_view password);

  Account create_account(const SessionToken& actor, std::string_view email, std::string_view password, Role role,
                         std::optional<std::string> hospital_name, const RegistrationHook& before_commit = {});

  // Unknown email and wrong password both raise InvalidCredentials.
  SessionToken login(std::string_view email, std::string_view password);

  // Returns the session for a live token. Throws TokenUnknown / TokenExpired.
  SessionToken authenticate(std::string_view token_id) const;

  // AUTHORITY satisfies every role requirement. Returns the account_id.
  std::string authorize(std::string_view token_id, Role required) const;
  std::string authorize_any(std::string_view token_id, std::initializer_list<Role> allowed) const;

  std::optional<Account> find_account(std::string_view account_id) const;
  std::size_t account_count() const;

  std::int64_t now() const { return options_.clock(); }

 private:
  void validate_password(std::string_view password) const;
  Account make_account(std::string account_id, std::string email, std::string_view password, Role role,
                       std::optional<std::string> hospital_name) const;

  AccountStore store_;
  AuthOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, Account> by_id_;
  std::map<std::string, std::string> id_by_email_;
  std::set<std::string> reserved_emails_;  // creations in flight
  mutable std::map<std::string, SessionToken> sessions_;
};

}  // namespace vaxledger::auth
