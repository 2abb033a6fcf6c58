#pragma once

#include "vaxledger/node.hpp"

#include <memory>
#include <string>

namespace vaxledger::node {

// JSON API in front of a Node. Routes:
//   POST /auth/login            POST /accounts       POST /records
//   GET  /records/{aadhaar}     GET  /credential/{aadhaar}
//   POST /verify                GET  /chain/head     GET  /blocks?from=&limit=
//   GET  /rejections            GET  /healthz
class HttpServer {
 public:
  explicit HttpServer(Node& node);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 binds an ephemeral port. Returns the bound port; throws
  // std::runtime_error if the address cannot be bound.
  int bind(const std::string& host, int port);
  // Serves until stop(). Requires bind().
  void listen();
  // listen() on a background thread.
  void start();
  void stop();

  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vaxledger::node
