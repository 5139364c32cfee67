#include "modelsync/client.hpp"

#include <algorithm>
#include <utility>

#include "modelsync/spatial.hpp"

namespace modelsync::client {

namespace msg = wire::msg;

ClientReplica ClientReplica::from_welcome(const msg::Welcome& welcome) {
  ClientReplica r;
  r.me_ = welcome.user_id;
  r.session_ = welcome.session;
  r.committed_ = welcome.snapshot;
  r.last_applied_seq_ = welcome.last_seq;
  for (const auto& member : welcome.members) {
    if (member.user_id != r.me_) r.peers_[member.user_id] = Peer{member.display_name, std::nullopt};
  }
  for (const auto& entry : welcome.ownership) {
    r.owners_[entry.object] = entry.owner;
    if (entry.owner == r.me_) r.held_.insert(entry.object);
  }
  return r;
}

void ClientReplica::diagnose(std::string kind, std::string detail) {
  diagnostics_.push_back(Diagnostic{std::move(kind), std::move(detail)});
}

ClassModel ClientReplica::effective_model() const {
  ClassModel model = committed_;
  for (const auto& edit : pending_) {
    // An edit that no longer applies is shown as if absent.
    (void)apply_event_in_place(model, edit.event);
  }
  return model;
}

Result<msg::EventSubmit, LocalValidationFailed> ClientReplica::submit_local(ModelEvent event) {
  ClassModel model = effective_model();
  auto status = apply_event_in_place(model, event);
  if (!status) return fail(LocalValidationFailed{status.error()});
  const std::uint64_t tag = next_tag_++;
  pending_.push_back(PendingEdit{tag, event});
  return msg::EventSubmit{tag, std::move(event)};
}

Status<SequenceGap> ClientReplica::on_broadcast(const msg::EventBroadcast& broadcast) {
  if (broadcast.seq != last_applied_seq_ + 1) {
    diagnose("SequenceGap", "expected " + std::to_string(last_applied_seq_ + 1) + " got " +
                                std::to_string(broadcast.seq));
    return fail(SequenceGap{last_applied_seq_ + 1, broadcast.seq});
  }
  auto status = apply_event_in_place(committed_, broadcast.event);
  if (!status) {
    diagnose("ApplyFailed", std::string(to_string(status.error().code)) + " at seq " +
                                std::to_string(broadcast.seq));
  }
  last_applied_seq_ = broadcast.seq;

  if (broadcast.client_tag && broadcast.actor == me_) {
    auto it = std::find_if(pending_.begin(), pending_.end(),
                           [&](const PendingEdit& e) { return e.client_tag == *broadcast.client_tag; });
    if (it != pending_.end()) pending_.erase(it);
  }

  const ElementId& subject = subject_of(broadcast.event);
  if (std::holds_alternative<events::CommitPose>(broadcast.event)) {
    if (auto it = live_poses_.find(subject); it != live_poses_.end()) it->second.pose.reset();
    owners_.erase(subject);
    held_.erase(subject);
  } else if (std::holds_alternative<events::DeleteClass>(broadcast.event)) {
    live_poses_.erase(subject);
    owners_.erase(subject);
    held_.erase(subject);
    outgoing_seq_.erase(subject);
  }
  return Unit{};
}

void ClientReplica::on_nack(const msg::Nack& nack) {
  if (nack.client_tag) {
    auto it = std::find_if(pending_.begin(), pending_.end(),
                           [&](const PendingEdit& e) { return e.client_tag == *nack.client_tag; });
    if (it == pending_.end()) return;
    pending_.erase(it);
  }
  if (nack.reason == wire::NackReason::NotOwner && nack.object) held_.erase(*nack.object);
  diagnose("Nack", std::string(wire::to_string(nack.reason)));
}

bool ClientReplica::on_movement(const wire::MovementPacket& packet) {
  if (held_.contains(packet.subject)) return false;
  auto it = live_poses_.find(packet.subject);
  const auto last = it == live_poses_.end() ? std::nullopt : std::optional(it->second.seq);
  if (wire::fresher(last, packet.seq) == wire::Freshness::Stale) return false;
  if (it != live_poses_.end() && !it->second.pose) {
    // The drag already ended in a CommitPose; only a new grant reopens it.
    return false;
  }
  live_poses_[packet.subject] = LivePose{packet.seq, packet.pose};
  return true;
}

bool ClientReplica::on_presence(const wire::PresencePacket& packet) {
  if (packet.user == me_) return false;
  Peer& peer = peers_[packet.user];
  const auto last = peer.presence ? std::optional(peer.presence->seq) : std::nullopt;
  if (wire::fresher(last, packet.seq) == wire::Freshness::Stale) return false;
  peer.presence = packet;
  return true;
}

void ClientReplica::on_grab_grant(const msg::GrabGrant& grant) {
  owners_[grant.object] = grant.owner;
  live_poses_.erase(grant.object);
  if (grant.owner == me_) {
    held_.insert(grant.object);
    outgoing_seq_[grant.object] = 0;
  }
}

void ClientReplica::on_grab_deny(const msg::GrabDeny& deny) {
  owners_[deny.object] = deny.owner;
  diagnose("GrabDenied", "held by " + deny.owner.to_string());
}

void ClientReplica::on_peer_joined(const msg::PeerJoined& joined) {
  if (joined.user_id == me_) return;
  peers_[joined.user_id].display_name = joined.display_name;
}

void ClientReplica::on_peer_left(const msg::PeerLeft& left) {
  peers_.erase(left.user_id);
  std::erase_if(owners_, [&](const auto& entry) { return entry.second == left.user_id; });
}

void ClientReplica::on_voice(const msg::VoiceFrame& frame) { voice_.push_back(frame); }

Status<SequenceGap> ClientReplica::on_control(const wire::ControlMessage& message) {
  return std::visit(
      [this](const auto& m) -> Status<SequenceGap> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, msg::EventBroadcast>) {
          return on_broadcast(m);
        } else {
          if constexpr (std::is_same_v<T, msg::Nack>) on_nack(m);
          if constexpr (std::is_same_v<T, msg::GrabGrant>) on_grab_grant(m);
          if constexpr (std::is_same_v<T, msg::GrabDeny>) on_grab_deny(m);
          if constexpr (std::is_same_v<T, msg::PeerJoined>) on_peer_joined(m);
          if constexpr (std::is_same_v<T, msg::PeerLeft>) on_peer_left(m);
          if constexpr (std::is_same_v<T, msg::VoiceFrame>) on_voice(m);
          return Unit{};
        }
      },
      message);
}

std::optional<wire::MovementPacket> ClientReplica::move_held(const ElementId& object, const Pose& pose) {
  if (!held_.contains(object)) return std::nullopt;
  const std::uint32_t seq = ++outgoing_seq_[object];
  live_poses_[object] = LivePose{seq, pose};
  return wire::MovementPacket{object, seq, pose};
}

std::optional<msg::Release> ClientReplica::release_held(const ElementId& object, std::optional<Pose> pose) {
  if (!held_.contains(object)) return std::nullopt;
  Pose final_pose;
  if (pose) {
    final_pose = *pose;
  } else if (auto current = effective_pose(object)) {
    final_pose = *current;
  } else {
    return std::nullopt;
  }
  held_.erase(object);
  live_poses_[object] = LivePose{outgoing_seq_[object], final_pose};
  return msg::Release{object, final_pose};
}

std::optional<Pose> ClientReplica::effective_pose(const ElementId& id) const {
  if (auto it = live_poses_.find(id); it != live_poses_.end() && it->second.pose) return it->second.pose;
  const ClassModel model = effective_model();
  if (auto it = model.classes.find(id); it != model.classes.end()) return it->second.pose;
  return std::nullopt;
}

RenderView ClientReplica::view() const {
  const ClassModel model = effective_model();
  std::set<ElementId> pending_ids;
  for (const auto& edit : pending_) pending_ids.insert(subject_of(edit.event));

  RenderView out;
  for (const auto& [id, node] : model.classes) {
    RenderedClass rc;
    rc.id = id;
    rc.name = node.name;
    rc.attributes = node.attributes;
    rc.methods = node.methods;
    rc.pose = node.pose;
    rc.extent = node.extent;
    rc.pending = pending_ids.contains(id);
    if (auto live = live_poses_.find(id); live != live_poses_.end() && live->second.pose) {
      rc.pose = *live->second.pose;
      rc.live = true;
    }
    if (auto owner = owners_.find(id); owner != owners_.end()) rc.held_by = owner->second;
    out.classes.push_back(std::move(rc));
  }
  auto center_of = [&out](const ElementId& id) {
    auto it = std::find_if(out.classes.begin(), out.classes.end(), [&](const RenderedClass& c) { return c.id == id; });
    return it == out.classes.end() ? Vec3{} : it->pose.position;
  };
  for (const auto& [id, conn] : model.connectors) {
    out.connectors.push_back(RenderedConnector{id, conn.kind, arrowhead(conn.kind), conn.source, conn.target,
                                               center_of(conn.source), center_of(conn.target),
                                               pending_ids.contains(id)});
  }
  for (const auto& [user, peer] : peers_) {
    if (!peer.presence) continue;
    const auto& p = *peer.presence;
    out.avatars.push_back(RenderedAvatar{user, peer.display_name, p.head, p.left_hand, p.right_hand,
                                         p.left_gesture, p.right_gesture, spatial::label_anchor(p.head)});
  }
  return out;
}

std::vector<Diagnostic> ClientReplica::take_diagnostics() { return std::exchange(diagnostics_, {}); }

std::vector<msg::VoiceFrame> ClientReplica::take_voice() { return std::exchange(voice_, {}); }

}  // namespace modelsync::client
