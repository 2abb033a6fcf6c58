// vaxledger: operator tool for a ledger node.
//
// Exit codes: 0 success, 1 user error (bad input, rejected request, non-VALID
// credential, record not found), 2 system error (I/O, unreachable node, 5xx).

#include "vaxledger/credential.hpp"
#include "vaxledger/http_api.hpp"
#include "vaxledger/node.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <termios.h>
#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <iostream>

namespace {

namespace vl = vaxledger;
using vl::codec::Map;
using vl::codec::Value;

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  bool json = false;
  bool test_mode = false;
  std::string url;
};

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::string prompt_secret(const std::string& prompt) {
  if (!::isatty(STDIN_FILENO)) return {};
  std::cerr << prompt << std::flush;
  termios old{};
  ::tcgetattr(STDIN_FILENO, &old);
  termios quiet = old;
  quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
  ::tcsetattr(STDIN_FILENO, TCSANOW, &quiet);
  std::string line;
  std::getline(std::cin, line);
  ::tcsetattr(STDIN_FILENO, TCSANOW, &old);
  std::cerr << "\n";
  return line;
}

// Secrets come from the environment or a terminal prompt. A flag value is
// accepted only with --test-mode.
std::string secret(const Globals& g, const std::string& flag_value, const char* flag, const char* env_name,
                   const char* prompt) {
  if (!flag_value.empty()) {
    if (!g.test_mode) {
      throw UserError(std::string(flag) + " on the command line requires --test-mode; set " + env_name + " instead");
    }
    return flag_value;
  }
  if (auto v = env(env_name)) return *v;
  std::string typed = prompt_secret(prompt);
  if (typed.empty()) throw UserError(std::string("no secret given; set ") + env_name);
  return typed;
}

void emit(const Globals& g, const Value& json, const std::vector<std::string>& lines) {
  if (g.json) {
    std::cout << vl::codec::encode_canonical(json) << "\n";
  } else {
    for (const auto& l : lines) std::cout << l << "\n";
  }
}

// --- HTTP client helpers ---

struct Reply {
  int status;
  Value body;
};

Reply call(const Globals& g, const std::string& method, const std::string& path, const std::optional<Value>& body,
           const std::optional<std::string>& token) {
  httplib::Client client(g.url);
  if (!client.is_valid()) throw UserError("invalid --url " + g.url);
  client.set_connection_timeout(5);
  client.set_read_timeout(30);
  httplib::Headers headers;
  if (token) headers.emplace("Authorization", "Bearer " + *token);
  httplib::Result res = method == "GET"
                            ? client.Get(path, headers)
                            : client.Post(path, headers, body ? vl::codec::encode_canonical(*body) : std::string("{}"),
                                          "application/json");
  if (!res) throw SystemError("cannot reach " + g.url + ": " + httplib::to_string(res.error()));
  Value parsed;
  try {
    parsed = vl::codec::decode(res->body);
  } catch (const std::exception&) {
    parsed = res->body;
  }
  return {res->status, std::move(parsed)};
}

[[noreturn]] void fail_reply(const Reply& r) {
  std::string msg = "HTTP " + std::to_string(r.status);
  if (r.body.is_map()) {
    const auto& m = r.body.as_map();
    if (auto it = m.find("error"); it != m.end() && it->second.is_text()) msg += " " + it->second.as_text();
    if (auto it = m.find("detail"); it != m.end() && it->second.is_text()) msg += ": " + it->second.as_text();
  }
  if (r.status >= 500) throw SystemError(msg);
  throw UserError(msg);
}

Reply expect(Reply r, std::initializer_list<int> ok) {
  for (int s : ok) {
    if (r.status == s) return r;
  }
  fail_reply(r);
}

std::string token_for(const Globals& g, const std::string& flag_value) {
  return secret(g, flag_value, "--token", "VAXLEDGER_TOKEN", "Session token: ");
}

std::string text_of(const Value& v, const char* key) {
  const auto& m = v.as_map();
  auto it = m.find(key);
  if (it == m.end()) return {};
  if (it->second.is_text()) return it->second.as_text();
  if (it->second.is_int()) return std::to_string(it->second.as_int());
  return vl::codec::encode_canonical(it->second);
}

std::filesystem::path config_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (auto v = env("VAXLEDGER_CONFIG")) return *v;
  throw UserError("no config file; pass --config or set VAXLEDGER_CONFIG");
}

// --- subcommands ---

struct InitArgs {
  std::string data_dir, email, password, listen = "127.0.0.1:8080", kdf = "interactive";
};

int cmd_init(const Globals& g, const InitArgs& a) {
  vl::node::InitOptions o;
  o.data_dir = a.data_dir;
  o.authority_email = a.email;
  o.listen_addr = a.listen;
  if (a.kdf == "minimal") {
    if (!g.test_mode) throw UserError("--kdf minimal requires --test-mode");
    o.kdf = vl::auth::KdfParams::minimal();
  } else if (a.kdf != "interactive") {
    throw UserError("--kdf must be interactive or minimal");
  }
  std::error_code ec;
  if (std::filesystem::exists(o.data_dir, ec) && !std::filesystem::is_empty(o.data_dir, ec)) {
    throw UserError(o.data_dir.string() + " is not empty");
  }
  o.authority_password =
      secret(g, a.password, "--authority-password", "VAXLEDGER_AUTHORITY_PASSWORD", "Authority password: ");
  vl::node::InitResult r;
  try {
    r = vl::node::initialize_data_dir(o);
  } catch (const vl::node::ConfigError& e) {
    throw UserError(e.what());
  } catch (const vl::auth::AuthError& e) {
    throw UserError(e.what());
  }
  emit(g,
       Map{{"credential_pubkey", r.credential_pubkey.hex()},
           {"producer_pubkey", r.producer_pubkey.hex()},
           {"config", r.config_path.string()},
           {"genesis_block_id", r.genesis_id.hex()}},
       {"credential_pubkey " + r.credential_pubkey.hex(), "producer_pubkey " + r.producer_pubkey.hex(),
        "config " + r.config_path.string(), "genesis_block_id " + r.genesis_id.hex()});
  return 0;
}

int cmd_serve(const Globals& g, const std::string& config_flag, const std::string& listen_override) {
  vl::node::NodeConfig config;
  try {
    config = vl::node::NodeConfig::load(config_path(config_flag));
    if (!listen_override.empty()) {
      config.listen_addr = listen_override;
      config.validate();
    }
  } catch (const std::exception& e) {
    throw SystemError(e.what());
  }

  // Termination signals are taken synchronously on this thread; every thread
  // started below inherits the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<vl::node::Node> node;
  std::unique_ptr<vl::node::HttpServer> server;
  int port = 0;
  const auto [host, want_port] = vl::node::split_host_port(config.listen_addr);
  try {
    node = std::make_unique<vl::node::Node>(config);
    server = std::make_unique<vl::node::HttpServer>(*node);
    port = server->bind(host, want_port);
  } catch (const std::exception& e) {
    throw SystemError(e.what());
  }
  node->start();
  server->start();
  emit(g, Map{{"listening", host + ":" + std::to_string(port)}, {"mode", config.mode == vl::node::Mode::Producer ? "producer" : "verifier"}},
       {"listening " + host + ":" + std::to_string(port)});
  std::cout.flush();

  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("signal {} received, shutting down", sig);
  server->stop();
  node->stop();  // waits for an in-flight block to be persisted
  return 0;
}

int cmd_login(const Globals& g, const std::string& email, const std::string& password_flag) {
  const std::string password = secret(g, password_flag, "--password", "VAXLEDGER_PASSWORD", "Password: ");
  auto r = expect(call(g, "POST", "/auth/login", Value(Map{{"email", email}, {"password", password}}), std::nullopt),
                  {200});
  emit(g, r.body,
       {"token " + text_of(r.body, "token"), "role " + text_of(r.body, "role"),
        "expires_at " + text_of(r.body, "expires_at")});
  return 0;
}

int cmd_register(const Globals& g, const std::string& role, const std::string& email, const std::string& hospital,
                 const std::string& token_flag, const std::string& password_flag) {
  const std::string token = token_for(g, token_flag);
  const std::string password =
      secret(g, password_flag, "--password", "VAXLEDGER_NEW_PASSWORD", "Password for the new account: ");
  Map body{{"email", email}, {"password", password}, {"role", role}};
  if (!hospital.empty()) body.emplace("hospital_name", hospital);
  auto r = expect(call(g, "POST", "/accounts", Value(body), token), {201});
  emit(g, r.body, {"account_id " + text_of(r.body, "account_id"), "role " + text_of(r.body, "role")});
  return 0;
}

struct IssueArgs {
  std::string aadhaar, full_name, vaccine, date, token;
  std::int64_t dose = 0;
};

int cmd_issue(const Globals& g, const IssueArgs& a) {
  if (!vl::registry::is_valid_aadhaar(a.aadhaar)) throw UserError("aadhaar fails the 12-digit Verhoeff check");
  const std::string token = token_for(g, a.token);
  Map body{{"aadhaar", a.aadhaar},
           {"full_name", a.full_name},
           {"vaccine_name", a.vaccine},
           {"dose_number", a.dose},
           {"date", a.date}};
  auto r = expect(call(g, "POST", "/records", Value(body), token), {202});
  emit(g, r.body, {"accepted position " + text_of(r.body, "position") + " nonce " + text_of(r.body, "nonce")});
  return 0;
}

int cmd_lookup(const Globals& g, const std::string& aadhaar, const std::string& token_flag) {
  if (!vl::registry::is_valid_aadhaar(aadhaar)) throw UserError("aadhaar fails the 12-digit Verhoeff check");
  const std::string token = token_for(g, token_flag);
  auto r = expect(call(g, "GET", "/records/" + aadhaar, std::nullopt, token), {200, 404});
  if (r.status == 404) {
    emit(g, Map{{"found", false}}, {"NOT_FOUND"});
    return 1;
  }
  const auto& record = r.body.as_map().at("record");
  std::vector<std::string> lines{"FOUND", "verified_at_height " + text_of(r.body, "verified_at_height"),
                                 "full_name " + text_of(record, "full_name")};
  for (const auto& e : record.as_map().at("entries").as_list()) {
    lines.push_back("dose " + text_of(e, "vaccine_name") + " " + text_of(e, "dose_number") + " " + text_of(e, "date") +
                    " " + text_of(e, "hospital_name"));
  }
  Map out = r.body.as_map();
  out.emplace("found", true);
  emit(g, out, lines);
  return 0;
}

int cmd_credential(const Globals& g, const std::string& aadhaar, const std::string& token_flag) {
  if (!vl::registry::is_valid_aadhaar(aadhaar)) throw UserError("aadhaar fails the 12-digit Verhoeff check");
  const std::string token = token_for(g, token_flag);
  auto r = expect(call(g, "GET", "/credential/" + aadhaar, std::nullopt, token), {200});
  emit(g, r.body, {text_of(r.body, "qr_payload")});
  return 0;
}

// Offline: no network I/O happens on this path.
int cmd_verify(const Globals& g, const std::string& payload, const std::string& pubkey_hex, std::int64_t now,
               std::int64_t validity_days) {
  vl::crypto::PublicKey pk;
  try {
    pk = vl::crypto::PublicKey::from_hex(pubkey_hex);
  } catch (const std::exception&) {
    throw UserError("--pubkey must be 64 lowercase hex characters");
  }
  if (now == 0) {
    now = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
  }
  auto status = vl::credential::verify_qr_payload(payload, pk, now, validity_days * 86400);
  const std::string s(vl::credential::to_string(status));
  emit(g, Map{{"status", s}}, {s});
  return status == vl::credential::Status::Valid ? 0 : 1;
}

Value fetch_head(const Globals& g) {
  auto r = expect(call(g, "GET", "/chain/head", std::nullopt, std::nullopt), {200});
  return r.body;
}

int cmd_sync_status(const Globals& g, const std::string& peer_url) {
  Value head = fetch_head(g);
  auto header = vl::ledger::BlockHeader::from_value(head);
  const auto id = vl::ledger::block_id(header).hex();
  Map out{{"height", static_cast<std::int64_t>(header.height)}, {"block_id", id},
          {"state_root", header.state_root.hex()}};
  std::vector<std::string> lines{"height " + std::to_string(header.height), "block_id " + id,
                                 "state_root " + header.state_root.hex()};
  if (!peer_url.empty()) {
    Globals pg = g;
    pg.url = peer_url;
    auto peer = vl::ledger::BlockHeader::from_value(fetch_head(pg));
    const bool in_sync = peer.height == header.height && vl::ledger::block_id(peer).hex() == id;
    out.emplace("peer_height", static_cast<std::int64_t>(peer.height));
    out.emplace("in_sync", in_sync);
    lines.push_back("peer_height " + std::to_string(peer.height));
    lines.push_back(in_sync ? "in_sync" : "behind");
  }
  emit(g, out, lines);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vaxledger: vaccination passport ledger node and tools"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  g.url = env("VAXLEDGER_URL").value_or("http://127.0.0.1:8080");
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_flag("--test-mode", g.test_mode, "Allow secrets as flags and cheap password hashing");
  app.add_option("--url", g.url, "Node base URL (env VAXLEDGER_URL)");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log to stderr");

  InitArgs init_args;
  auto* init = app.add_subcommand("init", "Create a producer data directory");
  init->add_option("--data-dir", init_args.data_dir)->required();
  init->add_option("--authority-email", init_args.email)->required();
  init->add_option("--authority-password", init_args.password, "Test mode only; else VAXLEDGER_AUTHORITY_PASSWORD");
  init->add_option("--listen", init_args.listen, "listen_addr written to the config");
  init->add_option("--kdf", init_args.kdf, "interactive (default) or minimal (test mode)");

  std::string config_flag, listen_override;
  auto* serve = app.add_subcommand("serve", "Run a node until SIGTERM");
  serve->add_option("--config", config_flag, "Config file (env VAXLEDGER_CONFIG)");
  serve->add_option("--listen", listen_override, "Override listen_addr; port 0 picks a free port");

  std::string email, password, token, hospital;
  auto* login = app.add_subcommand("login", "Obtain a session token");
  login->add_option("--email", email)->required();
  login->add_option("--password", password, "Test mode only; else VAXLEDGER_PASSWORD");

  auto* reg_provider = app.add_subcommand("register-provider", "Create a PROVIDER account (AUTHORITY token)");
  reg_provider->add_option("--email", email)->required();
  reg_provider->add_option("--hospital", hospital)->required();
  reg_provider->add_option("--password", password, "Test mode only; else VAXLEDGER_NEW_PASSWORD");
  reg_provider->add_option("--token", token, "Test mode only; else VAXLEDGER_TOKEN");

  auto* reg_officer = app.add_subcommand("register-officer", "Create an OFFICER account (AUTHORITY token)");
  reg_officer->add_option("--email", email)->required();
  reg_officer->add_option("--password", password, "Test mode only; else VAXLEDGER_NEW_PASSWORD");
  reg_officer->add_option("--token", token, "Test mode only; else VAXLEDGER_TOKEN");

  IssueArgs issue_args;
  auto* issue = app.add_subcommand("issue", "Record a vaccination dose (PROVIDER token)");
  issue->add_option("--aadhaar", issue_args.aadhaar)->required();
  issue->add_option("--full-name", issue_args.full_name)->required();
  issue->add_option("--vaccine", issue_args.vaccine)->required();
  issue->add_option("--dose", issue_args.dose)->required();
  issue->add_option("--date", issue_args.date, "YYYY-MM-DD")->required();
  issue->add_option("--token", issue_args.token, "Test mode only; else VAXLEDGER_TOKEN");

  std::string aadhaar;
  auto* lookup = app.add_subcommand("lookup", "Look up a traveler's record (OFFICER token)");
  lookup->add_option("--aadhaar", aadhaar)->required();
  lookup->add_option("--token", token, "Test mode only; else VAXLEDGER_TOKEN");

  auto* cred = app.add_subcommand("credential", "Fetch a signed QR payload (PROVIDER or OFFICER token)");
  cred->add_option("--aadhaar", aadhaar)->required();
  cred->add_option("--token", token, "Test mode only; else VAXLEDGER_TOKEN");

  std::string payload, pubkey;
  std::int64_t now = 0, validity_days = 365;
  auto* verify = app.add_subcommand("verify", "Verify a QR payload offline");
  verify->add_option("--qr-payload", payload)->required();
  verify->add_option("--pubkey", pubkey, "Authority credential public key (hex)")->required();
  verify->add_option("--now", now, "Unix time to verify at (default: current time)");
  verify->add_option("--validity-days", validity_days);

  std::string peer_url;
  auto* sync_status = app.add_subcommand("sync-status", "Show the node head, optionally against a peer");
  sync_status->add_option("--peer-url", peer_url);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  // Logs go to stderr so stdout stays parseable.
  spdlog::set_default_logger(spdlog::stderr_color_mt("vaxledger"));
  spdlog::set_pattern("[%Y-%m-%d %H:%M:%S] [%l] %v");
  if (!verbose && !serve->parsed()) spdlog::set_level(spdlog::level::warn);

  try {
    if (init->parsed()) return cmd_init(g, init_args);
    if (serve->parsed()) return cmd_serve(g, config_flag, listen_override);
    if (login->parsed()) return cmd_login(g, email, password);
    if (reg_provider->parsed()) return cmd_register(g, "PROVIDER", email, hospital, token, password);
    if (reg_officer->parsed()) return cmd_register(g, "OFFICER", email, "", token, password);
    if (issue->parsed()) return cmd_issue(g, issue_args);
    if (lookup->parsed()) return cmd_lookup(g, aadhaar, token);
    if (cred->parsed()) return cmd_credential(g, aadhaar, token);
    if (verify->parsed()) return cmd_verify(g, payload, pubkey, now, validity_days);
    if (sync_status->parsed()) return cmd_sync_status(g, peer_url);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const SystemError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
