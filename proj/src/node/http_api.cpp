#include "vaxledger/http_api.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

namespace vaxledger::node {

namespace {

using codec::Map;
using codec::Value;

struct HttpError {
  int status;
  std::string error;
  std::string detail;
};

void send_json(httplib::Response& res, int status, const Value& v) {
  res.status = status;
  res.set_content(codec::encode_canonical(v), "application/json");
}

void send_error(httplib::Response& res, const HttpError& e) {
  Map body{{"error", e.error}};
  if (!e.detail.empty()) body.emplace("detail", e.detail);
  send_json(res, e.status, body);
}

// Every authentication failure gets the same body so that responses do not
// reveal which part was wrong.
const HttpError kUnauthorized{401, "unauthorized", ""};

HttpError map_auth_error(const auth::AuthError& e) {
  using C = auth::AuthErrorCode;
  switch (e.code()) {
    case C::InvalidCredentials:
    case C::TokenExpired:
    case C::TokenUnknown: return kUnauthorized;
    case C::Forbidden: return {403, "forbidden", ""};
    case C::EmailTaken: return {409, "email_taken", ""};
    case C::WeakPassword: return {400, "weak_password", e.what()};
    case C::MissingHospital: return {400, "missing_hospital", e.what()};
    case C::InvalidEmail: return {400, "invalid_email", ""};
    case C::InvalidRole: return {400, "invalid_role", e.what()};
  }
  return {500, "internal", ""};
}

HttpError map_node_error(const NodeError& e) {
  switch (e.code()) {
    case NodeErrorCode::PoolDuplicate: return {409, "pool_duplicate", e.what()};
    case NodeErrorCode::WouldFail: {
      auto inner = *e.tx_error();
      std::string name = "would_fail:" + std::string(registry::to_string(inner));
      if (inner == registry::TxErrorCode::Unauthorized) return {403, name, e.what()};
      if (inner == registry::TxErrorCode::DuplicateRegistration) return {409, name, e.what()};
      return {400, name, e.what()};
    }
    case NodeErrorCode::NotFound: return {404, "not_found", ""};
    case NodeErrorCode::BadRequest: return {400, "bad_request", e.what()};
    case NodeErrorCode::WrongMode:
    case NodeErrorCode::Unavailable:
    case NodeErrorCode::PersistFailure:
    case NodeErrorCode::PeerUnreachable:
    case NodeErrorCode::InvalidBlockFromPeer: return {503, "unavailable", e.what()};
  }
  return {500, "internal", ""};
}

// Runs a handler and converts every known exception into a JSON error.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const HttpError& e) {
    send_error(res, e);
  } catch (const auth::AuthError& e) {
    send_error(res, map_auth_error(e));
  } catch (const NodeError& e) {
    send_error(res, map_node_error(e));
  } catch (const registry::InvalidAadhaar& e) {
    send_error(res, {400, "invalid_aadhaar", e.what()});
  } catch (const codec::DecodeError& e) {
    send_error(res, {400, "bad_json", e.what()});
  } catch (const codec::SchemaError& e) {
    send_error(res, {400, "bad_request", e.what()});
  } catch (const ledger::PersistFailure& e) {
    send_error(res, {503, "unavailable", e.what()});
  } catch (const std::exception& e) {
    spdlog::error("request failed: {}", e.what());
    send_error(res, {500, "internal", ""});
  }
}

std::string bearer_token(const httplib::Request& req) {
  const auto& h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) throw kUnauthorized;
  return h.substr(prefix.size());
}

Map body_map(const httplib::Request& req) {
  Value v = codec::decode(req.body);
  if (!v.is_map()) throw HttpError{400, "bad_request", "body must be a JSON object"};
  return v.as_map();
}

std::uint64_t query_uint(const httplib::Request& req, const char* name, std::uint64_t fallback) {
  if (!req.has_param(name)) return fallback;
  const auto s = req.get_param_value(name);
  std::uint64_t out = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw HttpError{400, "bad_request", std::string(name) + " must be a non-negative integer"};
  }
  return out;
}

// Paths that embed an Aadhaar number are logged by route only.
std::string loggable_path(const std::string& path) {
  for (std::string_view route : {"/records/", "/credential/"}) {
    if (path.rfind(route, 0) == 0 && path.size() > route.size()) return std::string(route) + "{aadhaar}";
  }
  return path;
}

class LoginLimiter {
 public:
  explicit LoginLimiter(int per_minute) : per_minute_(per_minute) {}

  bool allow(const std::string& ip, std::int64_t now) {
    std::lock_guard lock(mu_);
    auto& hits = hits_[ip];
    while (!hits.empty() && hits.front() <= now - 60) hits.pop_front();
    if (hits.size() >= static_cast<std::size_t>(per_minute_)) return false;
    hits.push_back(now);
    return true;
  }

 private:
  int per_minute_;
  std::mutex mu_;
  std::map<std::string, std::deque<std::int64_t>> hits_;
};

}  // namespace

struct HttpServer::Impl {
  explicit Impl(Node& n) : node(n), limiter(n.config().login_attempts_per_minute) {}

  Node& node;
  httplib::Server server;
  LoginLimiter limiter;
  int port = -1;
  std::thread thread;

  void routes();
};

void HttpServer::Impl::routes() {
  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::info("{} {} -> {}", req.method, loggable_path(req.path), res.status);
  });

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content("ok\n", "text/plain");
  });

  server.Post("/auth/login", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!limiter.allow(req.remote_addr, node.now())) throw HttpError{429, "too_many_requests", ""};
      Map body = body_map(req);
      auto email = body.find("email");
      auto password = body.find("password");
      if (email == body.end() || password == body.end() || !email->second.is_text() || !password->second.is_text()) {
        throw HttpError{400, "bad_request", "email and password are required"};
      }
      auto session = node.login(email->second.as_text(), password->second.as_text());
      send_json(res, 200,
                Map{{"token", session.token_id},
                    {"role", std::string(registry::to_string(session.role))},
                    {"account_id", session.account_id},
                    {"expires_at", session.expires_at}});
    });
  });

  server.Post("/accounts", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string token = bearer_token(req);
      Map body = body_map(req);
      codec::expect_keys(body, {"email", "password", "role"}, {"hospital_name"});
      auto role = registry::parse_role(codec::field(body, "role").as_text());
      if (!role) throw HttpError{400, "invalid_role", "role must be PROVIDER or OFFICER"};
      std::optional<std::string> hospital;
      if (auto it = body.find("hospital_name"); it != body.end()) hospital = it->second.as_text();
      auto account = node.create_account(token, codec::field(body, "email").as_text(),
                                         codec::field(body, "password").as_text(), *role, std::move(hospital));
      Map out{{"account_id", account.account_id}, {"role", std::string(registry::to_string(account.role))}};
      if (account.hospital_name) out.emplace("hospital_name", *account.hospital_name);
      send_json(res, 201, out);
    });
  });

  server.Post("/records", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string token = bearer_token(req);
      Map body = body_map(req);
      codec::expect_keys(body, {"aadhaar", "full_name", "vaccine_name", "dose_number", "date"}, {});
      IssueRequest r{codec::field(body, "aadhaar").as_text(), codec::field(body, "full_name").as_text(),
                     codec::field(body, "vaccine_name").as_text(), codec::field(body, "dose_number").as_int(),
                     codec::field(body, "date").as_text()};
      auto receipt = node.submit_record(token, r);
      send_json(res, 202,
                Map{{"accepted", receipt.accepted},
                    {"position", static_cast<std::int64_t>(receipt.position)},
                    {"nonce", receipt.nonce}});
    });
  });

  server.Get(R"(/records/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string token = bearer_token(req);
      auto found = node.officer_lookup(req.matches[1].str(), token);
      if (!found) throw HttpError{404, "not_found", ""};
      send_json(res, 200,
                Map{{"record", found->record.to_value()},
                    {"verified_at_height", static_cast<std::int64_t>(found->verified_at_height)}});
    });
  });

  server.Get(R"(/credential/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string token = bearer_token(req);
      send_json(res, 200, Map{{"qr_payload", node.credential_payload(req.matches[1].str(), token)}});
    });
  });

  server.Post("/verify", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Map body = body_map(req);
      auto it = body.find("qr_payload");
      if (it == body.end() || !it->second.is_text()) throw HttpError{400, "bad_request", "qr_payload is required"};
      send_json(res, 200, Map{{"status", std::string(credential::to_string(node.verify_payload(it->second.as_text())))}});
    });
  });

  server.Get("/chain/head", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, node.head().to_value()); });
  });

  server.Get("/blocks", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto from = query_uint(req, "from", 0);
      const auto limit = query_uint(req, "limit", kMaxBlocksPerPage);
      if (limit == 0 || limit > kMaxBlocksPerPage) {
        throw HttpError{400, "bad_request", "limit must be between 1 and " + std::to_string(kMaxBlocksPerPage)};
      }
      codec::List out;
      for (const auto& b : node.blocks(from, limit)) out.push_back(b.to_value());
      send_json(res, 200, out);
    });
  });

  server.Get("/rejections", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      node.auth().authorize(bearer_token(req), registry::Role::Authority);
      codec::List out;
      for (const auto& r : node.rejections()) {
        out.push_back(Map{{"tx", r.tx.to_value()}, {"reason", r.reason}, {"rejected_at", r.rejected_at}});
      }
      send_json(res, 200, out);
    });
  });
}

HttpServer::HttpServer(Node& node) : impl_(std::make_unique<Impl>(node)) { impl_->routes(); }

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->port = bound;
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  if (impl_->thread.joinable()) return;
  impl_->thread = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int HttpServer::port() const { return impl_->port; }

}  // namespace vaxledger::node
