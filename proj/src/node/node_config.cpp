#include "vaxledger/node_config.hpp"

#include "vaxledger/chain_store.hpp"

#include <charconv>
#include <fstream>

namespace vaxledger::node {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

std::pair<std::string, int> split_host_port(std::string_view addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw ConfigError("listen_addr must be host:port");
  int port = -1;
  auto port_s = addr.substr(colon + 1);
  auto res = std::from_chars(port_s.data(), port_s.data() + port_s.size(), port);
  if (res.ec != std::errc() || res.ptr != port_s.data() + port_s.size() || port < 0 || port > 65535) {
    throw ConfigError("listen_addr has an invalid port");
  }
  return {std::string(addr.substr(0, colon)), port};
}

void NodeConfig::validate() const {
  if (data_dir.empty()) throw ConfigError("data_dir is required");
  if (block_interval_s <= 0) throw ConfigError("block_interval_s must be positive");
  if (validity_window_days <= 0) throw ConfigError("validity_window_days must be positive");
  if (login_attempts_per_minute <= 0) throw ConfigError("login_attempts_per_minute must be positive");
  split_host_port(listen_addr);
  if (mode == Mode::Verifier) {
    if (!peer_url) throw ConfigError("verifier mode requires peer_url");
    if (!producer_pubkey) throw ConfigError("verifier mode requires producer_pubkey");
    if (!credential_pubkey) throw ConfigError("verifier mode requires credential_pubkey");
  } else {
    if (!producer_key_path || !credential_key_path) {
      throw ConfigError("producer mode requires producer_key_path and credential_key_path");
    }
  }
}

codec::Value NodeConfig::to_value() const {
  codec::Map m{
      {"block_interval_s", block_interval_s},
      {"data_dir", data_dir.string()},
      {"listen_addr", listen_addr},
      {"login_attempts_per_minute", login_attempts_per_minute},
      {"mode", mode == Mode::Producer ? "producer" : "verifier"},
      {"producer_id", producer_id},
      {"validity_window_days", validity_window_days},
  };
  if (peer_url) m.emplace("peer_url", *peer_url);
  if (producer_key_path) m.emplace("producer_key_path", producer_key_path->string());
  if (credential_key_path) m.emplace("credential_key_path", credential_key_path->string());
  if (producer_pubkey) m.emplace("producer_pubkey", *producer_pubkey);
  if (credential_pubkey) m.emplace("credential_pubkey", *credential_pubkey);
  if (kdf) m.emplace("kdf", kdf->to_value());
  return m;
}

NodeConfig NodeConfig::from_value(const codec::Value& v, const std::filesystem::path& base_dir) {
  NodeConfig c;
  try {
    const auto& m = v.as_map();
    codec::expect_keys(m, {"data_dir", "mode"},
                       {"block_interval_s", "listen_addr", "login_attempts_per_minute", "peer_url", "producer_key_path",
                        "credential_key_path", "producer_pubkey", "credential_pubkey", "producer_id",
                        "validity_window_days", "kdf"});
    const auto& mode = codec::field(m, "mode").as_text();
    if (mode == "producer") c.mode = Mode::Producer;
    else if (mode == "verifier") c.mode = Mode::Verifier;
    else throw ConfigError("mode must be 'producer' or 'verifier'");
    c.data_dir = resolve(base_dir, codec::field(m, "data_dir").as_text());
    auto opt_text = [&](const char* key) -> std::optional<std::string> {
      auto it = m.find(key);
      if (it == m.end()) return std::nullopt;
      return it->second.as_text();
    };
    auto opt_int = [&](const char* key, std::int64_t fallback) {
      auto it = m.find(key);
      return it == m.end() ? fallback : it->second.as_int();
    };
    if (auto s = opt_text("listen_addr")) c.listen_addr = *s;
    c.block_interval_s = opt_int("block_interval_s", c.block_interval_s);
    c.validity_window_days = opt_int("validity_window_days", c.validity_window_days);
    c.login_attempts_per_minute = static_cast<int>(opt_int("login_attempts_per_minute", c.login_attempts_per_minute));
    c.peer_url = opt_text("peer_url");
    if (auto s = opt_text("producer_key_path")) c.producer_key_path = resolve(base_dir, *s);
    if (auto s = opt_text("credential_key_path")) c.credential_key_path = resolve(base_dir, *s);
    c.producer_pubkey = opt_text("producer_pubkey");
    c.credential_pubkey = opt_text("credential_pubkey");
    if (auto s = opt_text("producer_id")) c.producer_id = *s;
    if (auto it = m.find("kdf"); it != m.end()) c.kdf = auth::KdfParams::from_value(it->second);
  } catch (const codec::SchemaError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

NodeConfig NodeConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ledger::read_file(path);
  } catch (const std::exception&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  try {
    return from_value(codec::decode(text), path.parent_path());
  } catch (const codec::DecodeError& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

void NodeConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << codec::encode_canonical(to_value()) << "\n";
}

}  // namespace vaxledger::node
