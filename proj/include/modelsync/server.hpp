#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "modelsync/ids.hpp"
#include "modelsync/model.hpp"
#include "modelsync/result.hpp"
#include "modelsync/wire.hpp"

namespace modelsync::server {

using Millis = std::chrono::milliseconds;

struct ServerConfig {
  double presence_rate_limit = 20.0;  // packets/s per user
  double movement_rate_limit = 20.0;  // packets/s per owned object
  std::size_t max_members = 16;

  bool valid() const { return presence_rate_limit > 0 && movement_rate_limit > 0 && max_members > 0; }
};

// Continuous-refill token bucket holding at most one second of traffic.
class RateLimiter {
 public:
  explicit RateLimiter(double rate_per_second = 20.0) : rate_(rate_per_second), tokens_(rate_per_second) {}
  bool try_take(Millis now);

 private:
  double rate_;
  double tokens_;
  std::optional<Millis> last_;
};

struct Member {
  std::string display_name;
  std::optional<wire::PresencePacket> last_presence;
};

struct SessionState {
  SessionId session;
  ClassModel model;
  std::uint64_t next_seq = 1;
  std::vector<SequencedEvent> event_log;
  std::map<ElementId, UserId> ownership;
  std::map<UserId, Member> members;
  std::map<ElementId, std::uint32_t> movement_seq;
  // Latest forwarded pose of each held object; not part of the model.
  std::map<ElementId, Pose> transient_pose;
};

// Empty iff every SessionState invariant holds, including
// model == fold_events(empty, event_log).
std::vector<std::string> check_invariants(const SessionState& state);

enum class DropCause : std::uint8_t { NotOwner, Stale, RateLimited };

struct DropCounts {
  std::uint64_t not_owner = 0;
  std::uint64_t stale = 0;
  std::uint64_t rate_limited = 0;

  std::uint64_t total() const { return not_owner + stale + rate_limited; }
  void count(DropCause cause);
  friend bool operator==(const DropCounts&, const DropCounts&) = default;
};

struct ServerMetrics {
  std::uint64_t joins = 0;
  std::uint64_t leaves = 0;
  std::uint64_t events_broadcast = 0;
  std::uint64_t nacks = 0;
  std::uint64_t grants = 0;
  std::uint64_t denies = 0;
  std::uint64_t movement_received = 0;
  std::uint64_t movement_forwarded = 0;
  DropCounts movement_dropped;
  std::uint64_t presence_received = 0;
  std::uint64_t presence_forwarded = 0;
  DropCounts presence_dropped;
  std::uint64_t voice_relayed = 0;
  std::uint64_t malformed_frames = 0;
};

// One encoded frame addressed to one member. Frames are shared between the
// recipients of a broadcast.
struct Outgoing {
  UserId to;
  std::shared_ptr<const wire::Frame> frame;
  wire::Channel channel = wire::Channel::Control;
};

using Outbox = std::vector<Outgoing>;

struct SessionFull {};

struct JoinOutcome {
  UserId user;
  Outbox out;
};

// Authoritative host of one collaborative session. Not thread-safe: every
// handler of a session must run on one serial loop, and the order in which
// handlers run is the conflict-resolution order.
class Session {
 public:
  explicit Session(SessionId id, ServerConfig config = {}, std::uint64_t id_seed = 0);

  Result<JoinOutcome, SessionFull> handle_join(std::string_view display_name);
  Outbox handle_event(const UserId& sender, const wire::msg::EventSubmit& submit);
  Outbox handle_grab(const UserId& user, const wire::msg::GrabRequest& request);
  Outbox handle_movement(const UserId& sender, const wire::MovementPacket& packet, Millis now);
  Outbox handle_presence(const UserId& sender, const wire::PresencePacket& packet, Millis now);
  Outbox handle_release(const UserId& user, const wire::msg::Release& release);
  Outbox handle_voice(const UserId& sender, const wire::msg::VoiceFrame& frame);
  Outbox handle_disconnect(const UserId& user);

  // Decodes a frame from a joined member and dispatches it. Malformed frames
  // and messages a client may not send are counted and dropped.
  Outbox handle_frame(const UserId& sender, std::span<const std::uint8_t> frame, Millis now);

  const SessionState& state() const { return state_; }
  const ServerMetrics& metrics() const { return metrics_; }
  const ServerConfig& config() const { return config_; }
  bool is_member(const UserId& user) const { return state_.members.contains(user); }
  std::uint64_t last_seq() const { return state_.next_seq - 1; }

  // Receives one structured record per join/leave/event/nack/drop.
  using LogSink = std::function<void(const nlohmann::json&)>;
  void set_log_sink(LogSink sink) { log_ = std::move(sink); }

 private:
  Outbox sequence_and_broadcast(const UserId& actor, std::optional<std::uint64_t> client_tag,
                                ModelEvent event);
  Outbox nack_to(const UserId& user, wire::msg::Nack nack);
  Outbox to_all(const wire::ControlMessage& message, const UserId* except = nullptr) const;
  void forget_element(const ElementId& id);
  void log(nlohmann::json record) const;

  ServerConfig config_;
  SessionState state_;
  ServerMetrics metrics_;
  std::mt19937_64 id_rng_;
  std::map<ElementId, RateLimiter> movement_limiters_;
  std::map<UserId, RateLimiter> presence_limiters_;
  LogSink log_;
};

}  // namespace modelsync::server
