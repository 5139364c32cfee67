#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include <json.hpp>

#include "modelsync/result.hpp"
#include "modelsync/server.hpp"

namespace modelsync::net {

struct ServeOptions {
  std::string address = "0.0.0.0";
  std::uint16_t port = 0;  // 0 picks a free port
  server::ServerConfig config;
  std::uint64_t seed = 0;
};

struct ListenError {
  std::string reason;
};

// WebSocket endpoint hosting one session. Every frame is a binary WebSocket
// message in the wire format. All session handlers run on the calling
// thread's io loop, so arrival order at that loop is the server order.
class WsServer {
 public:
  static Result<std::unique_ptr<WsServer>, ListenError> listen(const ServeOptions& options);
  ~WsServer();

  std::uint16_t port() const;
  // Processes network I/O until stop() is called.
  void run();
  // Handles whatever is ready, waiting at most timeout; for tests.
  void run_for(std::chrono::milliseconds timeout);
  // Safe to call from any thread.
  void stop();

  void set_log_sink(server::Session::LogSink sink);
  const server::Session& session() const;

 struct Impl;

 private:
  explicit WsServer(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace modelsync::net
