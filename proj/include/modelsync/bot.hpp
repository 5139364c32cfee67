#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "modelsync/client.hpp"
#include "modelsync/scenario.hpp"
#include "modelsync/wire.hpp"

namespace modelsync::sim {

using Micros = std::chrono::microseconds;

struct OutFrame {
  wire::Frame frame;
  wire::Channel channel = wire::Channel::Control;
};

struct BotStats {
  std::uint64_t events_submitted = 0;
  std::uint64_t local_rejections = 0;
  std::uint64_t nacks = 0;
  std::uint64_t broadcasts_observed = 0;
  std::uint64_t order_violations = 0;
  std::uint64_t grants = 0;
  std::uint64_t denies = 0;
  std::uint64_t movement_sent = 0;
  std::uint64_t movement_applied = 0;
  std::uint64_t presence_sent = 0;
  std::uint64_t voice_sent = 0;
  std::uint64_t voice_received = 0;
  std::uint64_t skipped_actions = 0;
  std::optional<std::uint64_t> welcome_last_seq;
};

// Runs one BotScript against any transport. The owner calls poll() whenever
// time advances to next_wakeup() and on_frame() for each received frame, and
// sends whatever poll() returns. Time is the caller's clock (virtual in the
// simulator, steady clock for live bots).
class BotDriver {
 public:
  enum class Phase { Idle, Joining, Joined, Rejected, Left };

  explicit BotDriver(BotScript script);

  std::vector<OutFrame> poll(Micros now);
  void on_frame(std::span<const std::uint8_t> frame, Micros now);
  std::optional<Micros> next_wakeup() const;

  // Every action has run; presence streaming has stopped.
  bool done() const;
  Phase phase() const { return phase_; }
  const std::optional<client::ClientReplica>& replica() const { return replica_; }
  const BotScript& script() const { return script_; }
  const BotStats& stats() const { return stats_; }

 private:
  struct Motion {
    ElementId object;
    Pose from;
    Pose to;
    Micros start{0};
    Micros interval{0};
    std::uint32_t steps = 1;
    std::uint32_t sent = 0;
  };

  void run_actions(Micros now, std::vector<OutFrame>& out);
  bool step_motion(Micros now, std::vector<OutFrame>& out);
  void emit_presence(std::vector<OutFrame>& out);
  void finish_action(Micros at);
  bool blocked() const;
  std::optional<Micros> action_due() const;

  BotScript script_;
  Phase phase_ = Phase::Idle;
  std::size_t next_action_ = 0;
  Micros cursor_{0};
  bool waiting_ = false;
  std::optional<ElementId> awaiting_grab_;
  std::optional<Motion> motion_;
  std::optional<client::ClientReplica> replica_;
  Vec3 avatar_position_{};
  std::uint32_t presence_seq_ = 0;
  std::optional<Micros> next_presence_;
  BotStats stats_;
};

}  // namespace modelsync::sim
