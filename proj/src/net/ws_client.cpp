#include "modelsync/net/ws_client.hpp"

#include <deque>
#include <functional>
#include <memory>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "modelsync/canonical_json.hpp"

namespace modelsync::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

// One client WebSocket on a private io_context with a FIFO write queue.
class Link : public std::enable_shared_from_this<Link> {
 public:
  using FrameHandler = std::function<void(std::span<const std::uint8_t>)>;

  Link(asio::io_context& io, Endpoint endpoint) : resolver_(io), ws_(io), endpoint_(std::move(endpoint)) {}

  void open(std::function<void()> on_open, FrameHandler on_frame) {
    on_open_ = std::move(on_open);
    on_frame_ = std::move(on_frame);
    resolver_.async_resolve(endpoint_.host, endpoint_.port,
                            [self = shared_from_this()](beast::error_code ec, tcp::resolver::results_type results) {
                              if (ec) return self->fail_with("resolve: " + ec.message());
                              beast::get_lowest_layer(self->ws_).async_connect(
                                  results, [self](beast::error_code ec2, const tcp::endpoint&) {
                                    if (ec2) return self->fail_with("connect: " + ec2.message());
                                    self->handshake();
                                  });
                            });
  }

  void send(wire::Frame frame) {
    if (closing_ || !error_.empty()) return;
    queue_.push_back(std::move(frame));
    if (open_ && queue_.size() == 1) write();
  }

  // Flushes queued frames, then closes the socket.
  void finish() {
    if (closing_) return;
    closing_ = true;
    if (!open_) {
      beast::error_code ignored;
      beast::get_lowest_layer(ws_).socket().close(ignored);
    } else if (queue_.empty()) {
      close();
    }
  }

  const std::string& error() const { return error_; }
  bool closed() const { return closed_; }

 private:
  void handshake() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::client));
    ws_.binary(true);
    const std::string host = endpoint_.host + ":" + endpoint_.port;
    ws_.async_handshake(host, endpoint_.target, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->fail_with("handshake: " + ec.message());
      self->open_ = true;
      if (self->on_open_) self->on_open_();
      if (!self->queue_.empty()) self->write();
      self->read();
    });
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        if (!self->closing_ && ec != websocket::error::closed) self->error_ = "connection lost: " + ec.message();
        return;
      }
      const auto data = self->buffer_.cdata();
      self->on_frame_({static_cast<const std::uint8_t*>(data.data()), data.size()});
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void write() {
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->fail_with("write: " + ec.message());
      self->queue_.pop_front();
      if (!self->queue_.empty()) {
        self->write();
      } else if (self->closing_) {
        self->close();
      }
    });
  }

  void close() {
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {
      self->closed_ = true;
    });
  }

  void fail_with(std::string reason) {
    if (error_.empty() && !closing_) error_ = std::move(reason);
    closed_ = true;
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

  tcp::resolver resolver_;
  websocket::stream<beast::tcp_stream> ws_;
  Endpoint endpoint_;
  beast::flat_buffer buffer_;
  std::deque<wire::Frame> queue_;
  std::function<void()> on_open_;
  FrameHandler on_frame_;
  std::string error_;
  bool open_ = false;
  bool closing_ = false;
  bool closed_ = false;
};

class LiveBot {
 public:
  LiveBot(const Endpoint& endpoint, sim::BotScript script, const LiveBotOptions& options)
      : link_(std::make_shared<Link>(io_, endpoint)),
        timer_(io_),
        driver_(std::move(script)),
        options_(options),
        start_(Clock::now()) {}

  Result<LiveBotResult, ConnectError> run() {
    link_->open([this] { tick(); }, [this](std::span<const std::uint8_t> frame) {
      driver_.on_frame(frame, now());
      tick();
    });
    arm(options_.connect_timeout);
    io_.run();
    if (!link_->error().empty()) return fail(ConnectError{link_->error()});
    if (!failure_.empty()) return fail(ConnectError{failure_});
    LiveBotResult result;
    result.phase = driver_.phase();
    result.stats = driver_.stats();
    if (const auto& replica = driver_.replica()) {
      result.last_applied_seq = replica->last_applied_seq();
      result.model_bytes = canonical_model_bytes(replica->committed());
    }
    return result;
  }

 private:
  sim::Micros now() const { return std::chrono::duration_cast<sim::Micros>(Clock::now() - start_); }

  void arm(sim::Micros at) {
    timer_.expires_at(start_ + at);
    timer_.async_wait([this](beast::error_code ec) {
      if (!ec) tick();
    });
  }

  void stop() {
    finished_ = true;
    timer_.cancel();
    link_->finish();
  }

  void tick() {
    if (finished_) return;
    if (!link_->error().empty() || link_->closed()) return stop();
    const sim::Micros t = now();
    for (auto& out : driver_.poll(t)) link_->send(std::move(out.frame));

    using Phase = sim::BotDriver::Phase;
    const Phase phase = driver_.phase();
    if (phase == Phase::Rejected) {
      failure_ = "session full";
      return stop();
    }
    if (phase == Phase::Left) return stop();
    if (phase == Phase::Joining && t >= options_.connect_timeout) {
      failure_ = "no Welcome from server";
      return stop();
    }

    std::optional<sim::Micros> wake = driver_.next_wakeup();
    if (driver_.done()) {
      if (!drain_until_) drain_until_ = t + options_.drain;
      const bool settled = driver_.replica() && driver_.replica()->pending().empty();
      if (settled || t >= *drain_until_) {
        link_->send(wire::encode_control(wire::msg::Leave{}));
        return stop();
      }
      wake = *drain_until_;
    }
    if (phase == Phase::Joining) wake = sim::Micros(options_.connect_timeout);
    if (wake) arm(std::max(*wake, t));
  }

  asio::io_context io_;
  std::shared_ptr<Link> link_;
  asio::steady_timer timer_;
  sim::BotDriver driver_;
  LiveBotOptions options_;
  Clock::time_point start_;
  std::optional<sim::Micros> drain_until_;
  std::string failure_;
  bool finished_ = false;
};

}  // namespace

Result<Endpoint, ConnectError> parse_url(std::string_view url) {
  std::string_view rest = url;
  if (rest.starts_with("ws://")) {
    rest.remove_prefix(5);
  } else if (rest.find("://") != std::string_view::npos) {
    return fail(ConnectError{"unsupported scheme in '" + std::string(url) + "'"});
  }
  Endpoint e;
  if (const auto slash = rest.find('/'); slash != std::string_view::npos) {
    e.target = std::string(rest.substr(slash));
    rest = rest.substr(0, slash);
  }
  const auto colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == rest.size()) {
    return fail(ConnectError{"expected host:port in '" + std::string(url) + "'"});
  }
  e.host = std::string(rest.substr(0, colon));
  e.port = std::string(rest.substr(colon + 1));
  if (e.port.find_first_not_of("0123456789") != std::string::npos) {
    return fail(ConnectError{"bad port in '" + std::string(url) + "'"});
  }
  return e;
}

Result<LiveBotResult, ConnectError> run_live_bot(const Endpoint& endpoint, sim::BotScript script,
                                                 const LiveBotOptions& options) {
  LiveBot bot(endpoint, std::move(script), options);
  return bot.run();
}

Result<wire::msg::Welcome, ConnectError> fetch_welcome(const Endpoint& endpoint, std::string_view display_name,
                                                       std::chrono::milliseconds timeout) {
  asio::io_context io;
  auto link = std::make_shared<Link>(io, endpoint);
  std::optional<wire::msg::Welcome> welcome;
  std::string failure;
  link->send(wire::encode_control(wire::msg::Join{std::string(display_name)}));
  link->open({}, [&](std::span<const std::uint8_t> frame) {
    if (welcome || !failure.empty()) return;
    auto decoded = wire::decode_control(frame);
    if (!decoded) return;
    if (const auto* w = std::get_if<wire::msg::Welcome>(&*decoded)) {
      welcome = *w;
      link->send(wire::encode_control(wire::msg::Leave{}));
      link->finish();
    } else if (const auto* nack = std::get_if<wire::msg::Nack>(&*decoded);
               nack && nack->reason == wire::NackReason::SessionFull) {
      failure = "session full";
      link->finish();
    }
  });
  io.run_for(timeout);
  if (welcome) return *welcome;
  if (!failure.empty()) return fail(ConnectError{failure});
  if (!link->error().empty()) return fail(ConnectError{link->error()});
  return fail(ConnectError{"timed out waiting for Welcome"});
}

}  // namespace modelsync::net
