#include "vaxledger/auth.hpp"

#include "vaxledger/crypto.hpp"

#include <fcntl.h>
#include <sodium.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>

namespace vaxledger::auth {

namespace {

std::int64_t system_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xc0) != 0x80;
  }));
}

// Releases an email reservation however create_account exits.
class Reservation {
 public:
  Reservation(std::mutex& mu, std::set<std::string>& reserved, std::string email)
      : mu_(mu), reserved_(reserved), email_(std::move(email)) {}
  ~Reservation() {
    std::lock_guard lock(mu_);
    reserved_.erase(email_);
  }
  Reservation(const Reservation&) = delete;
  Reservation& operator=(const Reservation&) = delete;

 private:
  std::mutex& mu_;
  std::set<std::string>& reserved_;
  std::string email_;
};

}  // namespace

std::string_view to_string(AuthErrorCode c) {
  switch (c) {
    case AuthErrorCode::Forbidden: return "Forbidden";
    case AuthErrorCode::EmailTaken: return "EmailTaken";
    case AuthErrorCode::WeakPassword: return "WeakPassword";
    case AuthErrorCode::MissingHospital: return "MissingHospital";
    case AuthErrorCode::InvalidEmail: return "InvalidEmail";
    case AuthErrorCode::InvalidRole: return "InvalidRole";
    case AuthErrorCode::InvalidCredentials: return "InvalidCredentials";
    case AuthErrorCode::TokenExpired: return "TokenExpired";
    case AuthErrorCode::TokenUnknown: return "TokenUnknown";
  }
  return "Unknown";
}

AuthError::AuthError(AuthErrorCode code) : std::runtime_error(std::string(to_string(code))), code_(code) {}
AuthError::AuthError(AuthErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

KdfParams KdfParams::interactive() {
  return {"argon2id13", crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE};
}

KdfParams KdfParams::minimal() { return {"argon2id13", crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN}; }

codec::Value KdfParams::to_value() const {
  return codec::Map{{"algorithm", algorithm},
                    {"memlimit", static_cast<std::int64_t>(memlimit)},
                    {"opslimit", static_cast<std::int64_t>(opslimit)}};
}

KdfParams KdfParams::from_value(const codec::Value& v) {
  const auto& m = v.as_map();
  codec::expect_keys(m, {"algorithm", "memlimit", "opslimit"});
  KdfParams k;
  k.algorithm = codec::field(m, "algorithm").as_text();
  if (k.algorithm != "argon2id13") throw codec::SchemaError("unsupported kdf '" + k.algorithm + "'");
  auto ops = codec::field(m, "opslimit").as_int();
  auto mem = codec::field(m, "memlimit").as_int();
  if (ops <= 0 || mem <= 0) throw codec::SchemaError("kdf costs must be positive");
  k.opslimit = static_cast<std::uint64_t>(ops);
  k.memlimit = static_cast<std::uint64_t>(mem);
  return k;
}

codec::Value Account::to_value() const {
  codec::Map m{
      {"account_id", account_id},
      {"email", email},
      {"kdf_params", kdf.to_value()},
      {"password_hash", password_hash},
      {"role", registry::to_string(role)},
      {"salt", salt},
  };
  if (hospital_name) m.emplace("hospital_name", *hospital_name);
  return m;
}

Account Account::from_value(const codec::Value& v) {
  const auto& m = v.as_map();
  codec::expect_keys(m, {"account_id", "email", "kdf_params", "password_hash", "role", "salt"}, {"hospital_name"});
  Account a;
  a.account_id = codec::field(m, "account_id").as_text();
  a.email = codec::field(m, "email").as_text();
  a.kdf = KdfParams::from_value(codec::field(m, "kdf_params"));
  a.password_hash = codec::from_hex(codec::field(m, "password_hash").as_text());
  a.salt = codec::from_hex(codec::field(m, "salt").as_text());
  if (a.salt.size() != crypto_pwhash_SALTBYTES) throw codec::SchemaError("salt must be 16 bytes");
  auto role = registry::parse_role(codec::field(m, "role").as_text());
  if (!role) throw codec::SchemaError("unknown role");
  a.role = *role;
  if (auto it = m.find("hospital_name"); it != m.end()) a.hospital_name = it->second.as_text();
  return a;
}

std::string account_id_for(Role role, std::string_view email) {
  std::string prefix(registry::to_string(role));
  std::transform(prefix.begin(), prefix.end(), prefix.begin(), [](unsigned char c) { return std::tolower(c); });
  return prefix + "-" + codec::hash_sha256(email).hex().substr(0, 16);
}

std::string normalize_email(std::string_view email) {
  auto first = email.find_first_not_of(" \t");
  auto last = email.find_last_not_of(" \t");
  std::string e = first == std::string_view::npos ? std::string() : std::string(email.substr(first, last - first + 1));
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  auto at = e.find('@');
  bool ok = !e.empty() && e.size() <= 254 && at != std::string::npos && at > 0 && e.find('@', at + 1) == std::string::npos;
  if (ok) {
    auto domain = std::string_view(e).substr(at + 1);
    auto dot = domain.rfind('.');
    ok = dot != std::string_view::npos && dot > 0 && dot + 1 < domain.size();
  }
  ok = ok && std::none_of(e.begin(), e.end(), [](unsigned char c) { return c <= 0x20 || c == 0x7f; });
  if (!ok) throw AuthError(AuthErrorCode::InvalidEmail, "email must look like name@domain.tld");
  return e;
}

codec::Bytes derive_password_hash(std::string_view password, const codec::Bytes& salt, const KdfParams& kdf) {
  crypto::ensure_initialized();
  if (salt.size() != crypto_pwhash_SALTBYTES) throw std::invalid_argument("salt must be 16 bytes");
  codec::Bytes out(32);
  if (crypto_pwhash(out.data(), out.size(), password.data(), password.size(), salt.data(), kdf.opslimit,
                    static_cast<std::size_t>(kdf.memlimit), crypto_pwhash_ALG_ARGON2ID13) != 0) {
    throw std::runtime_error("password hashing ran out of memory");
  }
  return out;
}

AccountStore::AccountStore(std::filesystem::path path) : path_(std::move(path)) {}

std::vector<Account> AccountStore::load() const {
  std::vector<Account> out;
  if (!std::filesystem::exists(path_)) return out;
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(Account::from_value(codec::decode_canonical(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("account store " + path_.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void AccountStore::append(const Account& account) {
  std::string line = codec::encode_canonical(account.to_value()) + "\n";
  int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
  if (fd < 0) throw std::runtime_error("cannot open account store " + path_.string());
  bool ok = ::write(fd, line.data(), line.size()) == static_cast<ssize_t>(line.size()) && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) throw std::runtime_error("cannot write account store " + path_.string());
}

AuthService::AuthService(std::filesystem::path accounts_file, AuthOptions options)
    : store_(std::move(accounts_file)), options_(std::move(options)) {
  if (!options_.clock) options_.clock = system_now;
  for (auto& a : store_.load()) {
    id_by_email_[a.email] = a.account_id;
    by_id_[a.account_id] = std::move(a);
  }
}

void AuthService::validate_password(std::string_view password) const {
  if (utf8_length(password) < kMinPasswordLength) {
    throw AuthError(AuthErrorCode::WeakPassword,
                    "password must be at least " + std::to_string(kMinPasswordLength) + " characters");
  }
}

Account AuthService::make_account(std::string account_id, std::string email, std::string_view password, Role role,
                                  std::optional<std::string> hospital_name) const {
  Account a;
  a.account_id = std::move(account_id);
  a.email = std::move(email);
  a.salt = crypto::random_bytes(crypto_pwhash_SALTBYTES);
  a.kdf = options_.kdf;
  a.password_hash = derive_password_hash(password, a.salt, a.kdf);
  a.role = role;
  a.hospital_name = std::move(hospital_name);
  return a;
}

Account AuthService::bootstrap_authority(std::string_view account_id, std::string_view email,
                                         std::string_view password) {
  std::string normalized = normalize_email(email);
  validate_password(password);
  Account a = make_account(std::string(account_id), normalized, password, Role::Authority, std::nullopt);
  std::lock_guard lock(mu_);
  if (id_by_email_.contains(normalized) || by_id_.contains(a.account_id)) throw AuthError(AuthErrorCode::EmailTaken);
  store_.append(a);
  id_by_email_[a.email] = a.account_id;
  by_id_[a.account_id] = a;
  return a;
}

Account AuthService::create_account(const SessionToken& actor, std::string_view email, std::string_view password,
                                    Role role, std::optional<std::string> hospital_name,
                                    const RegistrationHook& before_commit) {
  if (actor.role != Role::Authority) throw AuthError(AuthErrorCode::Forbidden, "only an authority may create accounts");
  if (role == Role::Authority) throw AuthError(AuthErrorCode::InvalidRole, "accounts may be PROVIDER or OFFICER");
  std::string normalized = normalize_email(email);
  validate_password(password);
  if (role == Role::Provider) {
    if (!hospital_name || hospital_name->empty()) {
      throw AuthError(AuthErrorCode::MissingHospital, "a provider account needs a hospital_name");
    }
  } else {
    hospital_name.reset();
  }

  {
    std::lock_guard lock(mu_);
    if (id_by_email_.contains(normalized) || !reserved_emails_.insert(normalized).second) {
      throw AuthError(AuthErrorCode::EmailTaken);
    }
  }
  Reservation reservation(mu_, reserved_emails_, normalized);

  Account a = make_account(account_id_for(role, normalized), normalized, password, role, std::move(hospital_name));
  if (before_commit) before_commit(a);

  std::lock_guard lock(mu_);
  store_.append(a);
  id_by_email_[a.email] = a.account_id;
  by_id_[a.account_id] = a;
  return a;
}

SessionToken AuthService::login(std::string_view email, std::string_view password) {
  std::optional<Account> account;
  std::string normalized;
  try {
    normalized = normalize_email(email);
  } catch (const AuthError&) {
  }
  {
    std::lock_guard lock(mu_);
    if (auto it = id_by_email_.find(normalized); it != id_by_email_.end()) account = by_id_.at(it->second);
  }
  if (!account) {
    // Same work as a real check so timing does not reveal unknown emails.
    static const codec::Bytes dummy_salt(crypto_pwhash_SALTBYTES, 0);
    derive_password_hash(password, dummy_salt, options_.kdf);
    throw AuthError(AuthErrorCode::InvalidCredentials);
  }
  codec::Bytes candidate = derive_password_hash(password, account->salt, account->kdf);
  bool match = candidate.size() == account->password_hash.size() &&
               sodium_memcmp(candidate.data(), account->password_hash.data(), candidate.size()) == 0;
  if (!match) throw AuthError(AuthErrorCode::InvalidCredentials);

  SessionToken t;
  t.token_id = codec::to_hex(crypto::random_bytes(32));
  t.account_id = account->account_id;
  t.role = account->role;
  t.issued_at = now();
  t.expires_at = t.issued_at + options_.session_lifetime;
  std::lock_guard lock(mu_);
  sessions_[t.token_id] = t;
  return t;
}

SessionToken AuthService::authenticate(std::string_view token_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(std::string(token_id));
  if (it == sessions_.end()) throw AuthError(AuthErrorCode::TokenUnknown);
  if (now() >= it->second.expires_at) {
    sessions_.erase(it);
    throw AuthError(AuthErrorCode::TokenExpired);
  }
  return it->second;
}

std::string AuthService::authorize(std::string_view token_id, Role required) const {
  return authorize_any(token_id, {required});
}

std::string AuthService::authorize_any(std::string_view token_id, std::initializer_list<Role> allowed) const {
  SessionToken t = authenticate(token_id);
  if (t.role == Role::Authority || std::find(allowed.begin(), allowed.end(), t.role) != allowed.end()) {
    return t.account_id;
  }
  throw AuthError(AuthErrorCode::Forbidden);
}

std::optional<Account> AuthService::find_account(std::string_view account_id) const {
  std::lock_guard lock(mu_);
  auto it = by_id_.find(std::string(account_id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t AuthService::account_count() const {
  std::lock_guard lock(mu_);
  return by_id_.size();
}

}  // namespace vaxledger::auth
