#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "modelsync/ids.hpp"
#include "modelsync/model.hpp"
#include "modelsync/result.hpp"
#include "modelsync/wire.hpp"

namespace modelsync::client {

struct PendingEdit {
  std::uint64_t client_tag = 0;
  ModelEvent event;

  friend bool operator==(const PendingEdit&, const PendingEdit&) = default;
};

// Latest accepted movement of one element. `pose` is cleared when a
// CommitPose lands; the seq stays so late packets of the finished drag are
// still rejected. A GrabGrant starts a new stream and erases the entry.
struct LivePose {
  std::uint32_t seq = 0;
  std::optional<Pose> pose;
};

struct Peer {
  std::string display_name;
  std::optional<wire::PresencePacket> presence;
};

struct Diagnostic {
  std::string kind;
  std::string detail;
};

struct LocalValidationFailed {
  ModelError error;
};

struct SequenceGap {
  std::uint64_t expected = 0;
  std::uint64_t received = 0;
};

struct RenderedClass {
  ElementId id;
  std::string name;
  std::vector<std::string> attributes;
  std::vector<std::string> methods;
  Pose pose;
  Vec3 extent;
  bool pending = false;
  bool live = false;
  std::optional<UserId> held_by;

  friend bool operator==(const RenderedClass&, const RenderedClass&) = default;
};

struct RenderedConnector {
  ElementId id;
  ConnectorKind kind = ConnectorKind::Association;
  ArrowheadStyle arrowhead = ArrowheadStyle::None;
  ElementId source;
  ElementId target;
  Vec3 from;
  Vec3 to;
  bool pending = false;

  friend bool operator==(const RenderedConnector&, const RenderedConnector&) = default;
};

struct RenderedAvatar {
  UserId user;
  std::string display_name;
  Pose head;
  Pose left_hand;
  Pose right_hand;
  wire::GestureState left_gesture = wire::GestureState::Relaxed;
  wire::GestureState right_gesture = wire::GestureState::Relaxed;
  Vec3 label_anchor;

  friend bool operator==(const RenderedAvatar&, const RenderedAvatar&) = default;
};

// Derived snapshot for a renderer; holds no state of its own.
struct RenderView {
  std::vector<RenderedClass> classes;
  std::vector<RenderedConnector> connectors;
  std::vector<RenderedAvatar> avatars;

  friend bool operator==(const RenderView&, const RenderView&) = default;
};

// Client-side state of one session member. Single-threaded: one context owns
// the replica and feeds it every incoming message in transport order.
class ClientReplica {
 public:
  static ClientReplica from_welcome(const wire::msg::Welcome& welcome);

  // Pre-flight check against the effective (optimistic) model; nothing is
  // sent when it fails.
  Result<wire::msg::EventSubmit, LocalValidationFailed> submit_local(ModelEvent event);

  Status<SequenceGap> on_broadcast(const wire::msg::EventBroadcast& broadcast);
  void on_nack(const wire::msg::Nack& nack);
  // True when the packet passed the freshness filter and was applied.
  bool on_movement(const wire::MovementPacket& packet);
  bool on_presence(const wire::PresencePacket& packet);
  void on_grab_grant(const wire::msg::GrabGrant& grant);
  void on_grab_deny(const wire::msg::GrabDeny& deny);
  void on_peer_joined(const wire::msg::PeerJoined& joined);
  void on_peer_left(const wire::msg::PeerLeft& left);
  void on_voice(const wire::msg::VoiceFrame& frame);

  // Routes any server-to-client control message; only a broadcast can fail.
  Status<SequenceGap> on_control(const wire::ControlMessage& message);

  // Owner side of a drag: next movement packet for a held object.
  std::optional<wire::MovementPacket> move_held(const ElementId& object, const Pose& pose);
  // Ends a drag. Without an explicit pose the last local live pose is used.
  std::optional<wire::msg::Release> release_held(const ElementId& object,
                                                 std::optional<Pose> pose = std::nullopt);

  RenderView view() const;
  // Committed model with pending edits replayed on top.
  ClassModel effective_model() const;
  std::optional<Pose> effective_pose(const ElementId& id) const;

  const UserId& me() const { return me_; }
  const SessionId& session() const { return session_; }
  const ClassModel& committed() const { return committed_; }
  std::uint64_t last_applied_seq() const { return last_applied_seq_; }
  const std::deque<PendingEdit>& pending() const { return pending_; }
  const std::map<ElementId, LivePose>& live_poses() const { return live_poses_; }
  const std::map<UserId, Peer>& peers() const { return peers_; }
  const std::map<ElementId, UserId>& owners() const { return owners_; }
  const std::set<ElementId>& held() const { return held_; }
  bool holds(const ElementId& id) const { return held_.contains(id); }

  std::vector<Diagnostic> take_diagnostics();
  std::vector<wire::msg::VoiceFrame> take_voice();

 private:
  ClientReplica() = default;
  void diagnose(std::string kind, std::string detail);

  UserId me_;
  SessionId session_;
  ClassModel committed_;
  std::uint64_t last_applied_seq_ = 0;
  std::deque<PendingEdit> pending_;
  std::uint64_t next_tag_ = 1;
  std::map<ElementId, LivePose> live_poses_;
  std::map<UserId, Peer> peers_;
  std::map<ElementId, UserId> owners_;
  std::set<ElementId> held_;
  std::map<ElementId, std::uint32_t> outgoing_seq_;
  std::vector<Diagnostic> diagnostics_;
  std::vector<wire::msg::VoiceFrame> voice_;
};

}  // namespace modelsync::client
