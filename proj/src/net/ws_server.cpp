#include "modelsync/net/ws_server.hpp"

#include <deque>
#include <map>
#include <random>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace modelsync::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxMessageBytes = 1 << 20;
// Lossy frames are shed once this many frames wait for a slow socket.
constexpr std::size_t kLossyQueueLimit = 256;

}  // namespace

struct Connection;

struct WsServer::Impl {
  Impl(const ServeOptions& options)
      : session(
            [&] {
              std::mt19937_64 rng(options.seed);
              return SessionId::random(rng);
            }(),
            options.config, options.seed),
        start(std::chrono::steady_clock::now()) {}

  void accept();
  void route(const server::Outbox& out);
  void on_message(const std::shared_ptr<Connection>& conn, std::span<const std::uint8_t> data);
  void on_closed(const std::shared_ptr<Connection>& conn);
  server::Millis now() const {
    return std::chrono::duration_cast<server::Millis>(std::chrono::steady_clock::now() - start);
  }
  void log(json record) const {
    if (sink) sink(record);
  }

  asio::io_context io;
  tcp::acceptor acceptor{io};
  server::Session session;
  std::map<UserId, std::shared_ptr<Connection>> by_user;
  std::chrono::steady_clock::time_point start;
  server::Session::LogSink sink;
};

struct Connection : std::enable_shared_from_this<Connection> {
  Connection(tcp::socket socket, WsServer::Impl& owner) : ws(std::move(socket)), impl(owner) {}

  void start() {
    ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws.read_message_max(kMaxMessageBytes);
    ws.binary(true);
    ws.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->impl.on_closed(self);
      self->read();
    });
  }

  void read() {
    ws.async_read(buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->impl.on_closed(self);
      const auto data = self->buffer.cdata();
      self->impl.on_message(self, {static_cast<const std::uint8_t*>(data.data()), data.size()});
      self->buffer.consume(self->buffer.size());
      if (!self->closed) self->read();
    });
  }

  void send(std::shared_ptr<const wire::Frame> frame, bool lossy) {
    if (closed || closing) return;
    if (lossy && queue.size() >= kLossyQueueLimit) return;
    queue.push_back(std::move(frame));
    if (queue.size() == 1) write();
  }

  void write() {
    ws.async_write(asio::buffer(*queue.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->impl.on_closed(self);
      self->queue.pop_front();
      if (!self->queue.empty()) {
        self->write();
      } else if (self->closing) {
        self->close();
      }
    });
  }

  // Flushes queued frames, then closes.
  void finish() {
    if (closing) return;
    closing = true;
    if (queue.empty()) close();
  }

  void close() {
    ws.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws;
  WsServer::Impl& impl;
  beast::flat_buffer buffer;
  std::deque<std::shared_ptr<const wire::Frame>> queue;
  std::optional<UserId> user;
  bool closing = false;
  bool closed = false;
};

void WsServer::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec != asio::error::operation_aborted) log({{"event", "accept_error"}, {"error", ec.message()}});
      if (acceptor.is_open()) accept();
      return;
    }
    std::make_shared<Connection>(std::move(socket), *this)->start();
    accept();
  });
}

void WsServer::Impl::route(const server::Outbox& out) {
  for (const auto& o : out) {
    auto it = by_user.find(o.to);
    if (it != by_user.end()) it->second->send(o.frame, wire::is_lossy(o.channel));
  }
}

void WsServer::Impl::on_message(const std::shared_ptr<Connection>& conn, std::span<const std::uint8_t> data) {
  if (conn->closing) return;
  if (!conn->user) {
    auto decoded = wire::decode_control(data);
    const auto* join = decoded ? std::get_if<wire::msg::Join>(&*decoded) : nullptr;
    if (join == nullptr) {
      log({{"event", "pre_join_frame_dropped"}});
      return;
    }
    auto joined = session.handle_join(join->display_name);
    if (!joined) {
      const wire::msg::Nack nack{std::nullopt, wire::NackReason::SessionFull, std::nullopt};
      conn->send(std::make_shared<const wire::Frame>(wire::encode_control(nack)), false);
      conn->finish();
      return;
    }
    conn->user = joined->user;
    by_user[joined->user] = conn;
    route(joined->out);
    return;
  }
  const UserId user = *conn->user;
  auto out = session.handle_frame(user, data, now());
  route(out);
  if (!session.is_member(user)) {
    by_user.erase(user);
    conn->finish();
  }
}

void WsServer::Impl::on_closed(const std::shared_ptr<Connection>& conn) {
  if (conn->closed) return;
  conn->closed = true;
  if (conn->user && session.is_member(*conn->user)) {
    const UserId user = *conn->user;
    by_user.erase(user);
    route(session.handle_disconnect(user));
  }
}

WsServer::WsServer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
WsServer::~WsServer() = default;

Result<std::unique_ptr<WsServer>, ListenError> WsServer::listen(const ServeOptions& options) {
  if (!options.config.valid()) return fail(ListenError{"invalid server configuration"});
  auto impl = std::make_unique<Impl>(options);
  try {
    const tcp::endpoint endpoint(asio::ip::make_address(options.address), options.port);
    impl->acceptor.open(endpoint.protocol());
    impl->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl->acceptor.bind(endpoint);
    impl->acceptor.listen(asio::socket_base::max_listen_connections);
  } catch (const boost::system::system_error& e) {
    return fail(ListenError{e.what()});
  }
  impl->accept();
  return std::unique_ptr<WsServer>(new WsServer(std::move(impl)));
}

std::uint16_t WsServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WsServer::run() {
  impl_->io.restart();
  impl_->io.run();
}

void WsServer::run_for(std::chrono::milliseconds timeout) {
  impl_->io.restart();
  impl_->io.run_for(timeout);
}

void WsServer::stop() { impl_->io.stop(); }

void WsServer::set_log_sink(server::Session::LogSink sink) {
  impl_->sink = sink;
  impl_->session.set_log_sink(std::move(sink));
}

const server::Session& WsServer::session() const { return impl_->session; }

}  // namespace modelsync::net
