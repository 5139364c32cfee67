// End-to-end over real WebSockets on an ephemeral local port.
#include <doctest.h>

#include <atomic>
#include <future>
#include <thread>

#include "modelsync/canonical_json.hpp"
#include "modelsync/net/ws_client.hpp"
#include "modelsync/net/ws_server.hpp"

using namespace modelsync;
using namespace modelsync::sim;
using namespace std::chrono_literals;

namespace {

Action at(std::int64_t ms, ActionBody body) { return Action{ms, std::move(body)}; }
Action now(ActionBody body) { return Action{std::nullopt, std::move(body)}; }

struct RunningServer {
  std::unique_ptr<net::WsServer> server;
  std::thread thread;

  explicit RunningServer(server::ServerConfig config = {}) {
    net::ServeOptions options;
    options.address = "127.0.0.1";
    options.port = 0;
    options.config = config;
    auto listening = net::WsServer::listen(options);
    REQUIRE(listening);
    server = std::move(listening).value();
    thread = std::thread([this] { server->run(); });
  }
  ~RunningServer() {
    server->stop();
    thread.join();
  }
  net::Endpoint endpoint() const { return {"127.0.0.1", std::to_string(server->port()), "/"}; }
};

}  // namespace

TEST_CASE("url parsing") {
  auto e = net::parse_url("ws://localhost:7420/session");
  REQUIRE(e);
  CHECK(e->host == "localhost");
  CHECK(e->port == "7420");
  CHECK(e->target == "/session");
  CHECK(net::parse_url("127.0.0.1:80"));
  CHECK_FALSE(net::parse_url("http://x:1"));
  CHECK_FALSE(net::parse_url("ws://nohost"));
  CHECK_FALSE(net::parse_url("ws://host:port"));
}

TEST_CASE("two live bots converge through the server") {
  RunningServer running;
  const ElementId a = ElementId::from_label("A");
  const ElementId b = ElementId::from_label("B");
  BotScript alice{"alice", 20.0,
                  {at(0, act::Join{}), now(act::SubmitEvent{events::CreateClass{a, "Alpha", Pose::identity()}}),
                   at(300, act::Grab{a}), now(act::MoveTo{a, Pose::at(1, 0, 1), 300, 20.0}),
                   now(act::Release{a, Pose::at(2, 0, 2)}), now(act::Speak{{1, 2, 3}}), at(1500, act::WaitMs{0})}};
  BotScript bob{"bob", 20.0,
                {at(0, act::Join{}), now(act::SubmitEvent{events::CreateClass{b, "Beta", Pose::identity()}}),
                 at(600, act::SubmitEvent{events::CreateConnector{ElementId::from_label("ab"),
                                                                   ConnectorKind::Association, b, a}}),
                 at(1500, act::WaitMs{0})}};
  auto fa = std::async(std::launch::async, [&] { return net::run_live_bot(running.endpoint(), alice); });
  auto fb = std::async(std::launch::async, [&] { return net::run_live_bot(running.endpoint(), bob); });
  auto ra = fa.get();
  auto rb = fb.get();
  REQUIRE_MESSAGE(ra, (ra ? "" : ra.error().reason));
  REQUIRE_MESSAGE(rb, (rb ? "" : rb.error().reason));

  // Stop the loop before reading server state from this thread.
  running.server->stop();
  running.thread.join();
  running.thread = std::thread([] {});
  const auto& session = running.server->session();
  CHECK(session.last_seq() == 4);
  CHECK(ra->last_applied_seq == 4);
  CHECK(rb->last_applied_seq == 4);
  CHECK(ra->model_bytes == canonical_model_bytes(session.state().model));
  CHECK(rb->model_bytes == canonical_model_bytes(session.state().model));
  CHECK(session.state().model.classes.at(a).pose == Pose::at(2, 0, 2));
  CHECK(ra->stats.grants == 1);
  CHECK(session.metrics().voice_relayed >= 1);
  CHECK(session.state().members.empty());
}

TEST_CASE("snapshot over the wire") {
  RunningServer running;
  const ElementId a = ElementId::from_label("A");
  BotScript author{"author", 0.0,
                   {at(0, act::Join{}), now(act::SubmitEvent{events::CreateClass{a, "Alpha", Pose::identity()}}),
                    now(act::SubmitEvent{events::RenameClass{a, "Omega"}})}};
  auto r = net::run_live_bot(running.endpoint(), author);
  REQUIRE(r);
  auto welcome = net::fetch_welcome(running.endpoint(), "snapshot");
  REQUIRE_MESSAGE(welcome, (welcome ? "" : welcome.error().reason));
  CHECK(welcome->last_seq == 2);
  CHECK(welcome->snapshot.classes.at(a).name == "Omega");
}

TEST_CASE("session full over the wire") {
  server::ServerConfig config;
  config.max_members = 1;
  RunningServer running(config);
  BotScript holder{"holder", 0.0, {at(0, act::Join{}), at(800, act::WaitMs{0})}};
  auto f = std::async(std::launch::async, [&] { return net::run_live_bot(running.endpoint(), holder); });
  std::this_thread::sleep_for(300ms);
  auto welcome = net::fetch_welcome(running.endpoint(), "second", 3s);
  REQUIRE_FALSE(welcome);
  CHECK(welcome.error().reason == "session full");
  CHECK(f.get());
}

TEST_CASE("connection refused") {
  net::Endpoint nowhere{"127.0.0.1", "1", "/"};
  CHECK_FALSE(net::fetch_welcome(nowhere, "x", 2s));
  CHECK_FALSE(net::run_live_bot(nowhere, BotScript{"x", 0.0, {at(0, act::Join{})}}));
}
