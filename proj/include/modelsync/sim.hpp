#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "modelsync/bot.hpp"
#include "modelsync/model.hpp"
#include "modelsync/result.hpp"
#include "modelsync/scenario.hpp"
#include "modelsync/server.hpp"
#include "modelsync/wire.hpp"

namespace modelsync::sim {

struct NetConfig {
  double base_latency_ms = 0.0;
  double jitter_ms = 0.0;             // uniform in [-jitter, +jitter]
  double movement_loss_prob = 0.0;    // movement and presence frames only
  std::uint64_t seed = 0;

  bool valid() const;
};

struct ChannelBytes {
  std::uint64_t control = 0;
  std::uint64_t movement = 0;
  std::uint64_t presence = 0;
  std::uint64_t voice = 0;

  void add(wire::Channel channel, std::size_t bytes);
};

struct StreamCounts {
  std::uint64_t sent = 0;           // frames emitted by bots
  std::uint64_t lost_uplink = 0;
  std::uint64_t late_uplink = 0;    // reached the server after the sender left
  std::uint64_t received = 0;       // frames that reached the server
  std::uint64_t forwarded = 0;
  server::DropCounts dropped;
  std::uint64_t fanout = 0;         // copies the server queued for peers
  std::uint64_t lost_downlink = 0;
  std::uint64_t delivered = 0;      // copies that reached a bot
  std::uint64_t late_downlink = 0;  // reached a bot that had already left
};

struct BotSummary {
  std::string name;
  std::string phase;
  std::optional<std::uint64_t> welcome_last_seq;
  std::uint64_t last_applied_seq = 0;
  std::uint64_t pending = 0;
  std::uint64_t order_violations = 0;
  bool matches_server = false;
};

struct SimReport {
  bool converged = false;
  std::string final_diff;
  std::uint64_t events_broadcast = 0;
  std::uint64_t nacks = 0;
  std::uint64_t grants = 0;
  std::uint64_t denies = 0;
  std::uint64_t order_violations = 0;
  std::uint64_t voice_relayed = 0;
  StreamCounts movement;
  StreamCounts presence;
  ChannelBytes bytes_per_channel;           // client -> server
  ChannelBytes downlink_bytes_per_channel;  // server -> clients
  double sim_duration_ms = 0.0;
  std::vector<BotSummary> bots;

  nlohmann::json to_json() const;
};

// Field-level comparison via canonical serialization; nullopt when equal.
std::optional<std::string> diff_models(const ClassModel& a, const ClassModel& b);

// Single-threaded virtual-time network: one server session, one BotDriver per
// scripted bot, and a pair of links (uplink/downlink) per bot. Reliable frames
// keep per-link FIFO order; movement/presence frames may reorder and drop.
class Simulator {
 public:
  enum class Direction : std::uint8_t { Uplink, Downlink };

  struct Delivery {
    Micros at{0};
    Direction direction = Direction::Uplink;
    std::size_t bot = 0;
    wire::Channel channel = wire::Channel::Control;
    std::uint64_t send_index = 0;
  };

  Simulator(Scenario scenario, NetConfig net, server::ServerConfig config = {});

  // Processes the earliest scheduled item. False once nothing is pending.
  bool step();
  // Runs every script to completion and drains all in-flight frames.
  void run_to_quiescence();
  SimReport report() const;

  Micros now() const { return now_; }
  const server::Session& session() const { return session_; }
  const BotDriver& bot(std::size_t i) const { return bots_[i].driver; }
  std::size_t bot_count() const { return bots_.size(); }

  // Puts a frame on a link at the current time, as if a bot (uplink) or the
  // server (downlink) had sent it.
  void inject(Direction direction, std::size_t bot, wire::Frame frame, wire::Channel channel);
  // Optional record of every delivered frame, in delivery order.
  void record_deliveries(bool enabled) { record_ = enabled; }
  const std::vector<Delivery>& deliveries() const { return delivery_log_; }

 private:
  enum class ItemKind : std::uint8_t { Wake, Deliver };

  struct Item {
    Micros at{0};
    std::uint64_t order = 0;
    ItemKind kind = ItemKind::Wake;
    Direction direction = Direction::Uplink;
    std::size_t bot = 0;
    wire::Channel channel = wire::Channel::Control;
    std::uint64_t send_index = 0;
    std::shared_ptr<const wire::Frame> frame;
  };

  struct Later {
    bool operator()(const Item& a, const Item& b) const {
      return a.at != b.at ? a.at > b.at : a.order > b.order;
    }
  };

  struct Link {
    Micros last_reliable{0};
  };

  struct BotSlot {
    BotDriver driver;
    std::optional<UserId> user;
    std::optional<Micros> scheduled_wake;
    Link uplink;
    Link downlink;
  };

  void send(Direction direction, std::size_t bot, std::shared_ptr<const wire::Frame> frame,
            wire::Channel channel);
  void deliver(const Item& item);
  void route(const server::Outbox& out);
  void service_bot(std::size_t bot);
  Micros sample_latency();
  double uniform01();
  StreamCounts& stream(wire::Channel channel);

  NetConfig net_;
  server::Session session_;
  std::vector<BotSlot> bots_;
  std::map<UserId, std::size_t> bot_of_user_;
  std::priority_queue<Item, std::vector<Item>, Later> queue_;
  std::mt19937_64 rng_;
  Micros now_{0};
  std::uint64_t order_ = 0;
  std::uint64_t send_index_ = 0;
  bool record_ = false;
  std::vector<Delivery> delivery_log_;
  StreamCounts movement_;
  StreamCounts presence_;
  ChannelBytes uplink_bytes_;
  ChannelBytes downlink_bytes_;
};

// Validates the scenario, runs it to quiescence and reports.
Result<SimReport, ScenarioInvalid> run(const Scenario& scenario, const NetConfig& net,
                                       const server::ServerConfig& config = {});

}  // namespace modelsync::sim
