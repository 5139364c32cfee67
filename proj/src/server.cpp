#include "modelsync/server.hpp"

#include <algorithm>
#include <utility>

#include "modelsync/canonical_json.hpp"

namespace modelsync::server {

namespace msg = wire::msg;
using nlohmann::json;

bool RateLimiter::try_take(Millis now) {
  if (last_) {
    const double elapsed = std::max<double>(0.0, double((now - *last_).count()) / 1000.0);
    tokens_ = std::min(rate_, tokens_ + elapsed * rate_);
  }
  last_ = now;
  if (tokens_ < 1.0) return false;
  tokens_ -= 1.0;
  return true;
}

void DropCounts::count(DropCause cause) {
  switch (cause) {
    case DropCause::NotOwner:
      ++not_owner;
      break;
    case DropCause::Stale:
      ++stale;
      break;
    case DropCause::RateLimited:
      ++rate_limited;
      break;
  }
}

namespace {

std::string_view to_string(DropCause cause) {
  switch (cause) {
    case DropCause::NotOwner:
      return "not_owner";
    case DropCause::Stale:
      return "stale";
    case DropCause::RateLimited:
      return "rate_limited";
  }
  return "unknown";
}

std::shared_ptr<const wire::Frame> share(const wire::ControlMessage& message) {
  return std::make_shared<const wire::Frame>(wire::encode_control(message));
}

}  // namespace

std::vector<std::string> check_invariants(const SessionState& state) {
  std::vector<std::string> problems;
  if (state.next_seq != state.event_log.size() + 1) problems.push_back("next_seq != len(event_log) + 1");
  for (std::size_t i = 0; i < state.event_log.size(); ++i) {
    if (state.event_log[i].seq != i + 1) {
      problems.push_back("event log not gapless at index " + std::to_string(i));
      break;
    }
  }
  for (const auto& [object, owner] : state.ownership) {
    if (!state.members.contains(owner)) problems.push_back("owner of " + object.to_string() + " is not a member");
    if (!state.model.classes.contains(object)) problems.push_back("owned element " + object.to_string() + " absent");
  }
  for (const auto& v : validate(state.model)) {
    problems.push_back("model violation " + std::string(to_string(v.rule)) + " on " + v.id.to_string());
  }
  auto folded = fold_events(ClassModel{}, state.event_log);
  if (!folded) {
    problems.push_back("event log rejected by fold");
  } else {
    if (!folded->diagnostics.empty()) problems.push_back("logged event failed to apply on replay");
    if (canonical_model_bytes(folded->model) != canonical_model_bytes(state.model)) {
      problems.push_back("model differs from fold of event log");
    }
  }
  return problems;
}

Session::Session(SessionId id, ServerConfig config, std::uint64_t id_seed)
    : config_(config), id_rng_(id_seed) {
  state_.session = id;
}

void Session::log(json record) const {
  if (log_) log_(record);
}

Outbox Session::to_all(const wire::ControlMessage& message, const UserId* except) const {
  Outbox out;
  auto frame = share(message);
  const auto channel = wire::channel_of(message);
  for (const auto& [user, member] : state_.members) {
    if (except != nullptr && user == *except) continue;
    out.push_back(Outgoing{user, frame, channel});
  }
  return out;
}

Outbox Session::nack_to(const UserId& user, msg::Nack nack) {
  ++metrics_.nacks;
  json record{{"event", "nack"}, {"user", user.to_string()}, {"reason", std::string(wire::to_string(nack.reason))}};
  if (nack.client_tag) record["client_tag"] = *nack.client_tag;
  log(std::move(record));
  Outbox out;
  out.push_back(Outgoing{user, share(nack), wire::Channel::Control});
  return out;
}

void Session::forget_element(const ElementId& id) {
  state_.ownership.erase(id);
  state_.movement_seq.erase(id);
  state_.transient_pose.erase(id);
  movement_limiters_.erase(id);
}

Outbox Session::sequence_and_broadcast(const UserId& actor, std::optional<std::uint64_t> client_tag,
                                       ModelEvent event) {
  // Caller has already applied `event` to the reference model.
  const std::uint64_t seq = state_.next_seq++;
  if (const auto* del = std::get_if<events::DeleteClass>(&event)) forget_element(del->id);
  if (const auto* commit = std::get_if<events::CommitPose>(&event)) forget_element(commit->id);

  msg::EventBroadcast tagged{seq, actor, client_tag, event};
  msg::EventBroadcast plain{seq, actor, std::nullopt, event};
  state_.event_log.push_back(SequencedEvent{seq, actor, std::move(event)});
  ++metrics_.events_broadcast;
  log({{"event", "event"}, {"seq", seq}, {"actor", actor.to_string()}, {"op", std::string(event_name(state_.event_log.back().event))}});

  Outbox out;
  auto plain_frame = share(plain);
  auto tagged_frame = client_tag ? share(tagged) : plain_frame;
  for (const auto& [user, member] : state_.members) {
    out.push_back(Outgoing{user, user == actor ? tagged_frame : plain_frame, wire::Channel::Control});
  }
  return out;
}

Result<JoinOutcome, SessionFull> Session::handle_join(std::string_view display_name) {
  if (state_.members.size() >= config_.max_members) {
    log({{"event", "join_rejected"}, {"name", std::string(display_name)}, {"reason", "SessionFull"}});
    return fail(SessionFull{});
  }
  UserId user;
  do {
    user = UserId::random(id_rng_);
  } while (state_.members.contains(user));

  JoinOutcome outcome{user, {}};
  outcome.out = to_all(msg::PeerJoined{user, std::string(display_name)});
  state_.members.emplace(user, Member{std::string(display_name), std::nullopt});
  presence_limiters_.insert_or_assign(user, RateLimiter(config_.presence_rate_limit));

  msg::Welcome welcome;
  welcome.session = state_.session;
  welcome.user_id = user;
  welcome.snapshot = state_.model;
  welcome.last_seq = last_seq();
  for (const auto& [id, member] : state_.members) welcome.members.push_back({id, member.display_name});
  for (const auto& [object, owner] : state_.ownership) welcome.ownership.push_back({object, owner});
  outcome.out.push_back(Outgoing{user, share(welcome), wire::Channel::Control});

  ++metrics_.joins;
  log({{"event", "join"}, {"user", user.to_string()}, {"name", std::string(display_name)}, {"last_seq", last_seq()}});
  return outcome;
}

Outbox Session::handle_event(const UserId& sender, const msg::EventSubmit& submit) {
  if (!is_member(sender)) return {};
  const ElementId& subject = subject_of(submit.event);
  if (std::holds_alternative<events::CommitPose>(submit.event)) {
    auto it = state_.ownership.find(subject);
    if (it == state_.ownership.end() || it->second != sender) {
      const auto reason = state_.model.classes.contains(subject) ? wire::NackReason::NotOwner
                                                                 : wire::NackReason::UnknownElement;
      return nack_to(sender, msg::Nack{submit.client_tag, reason, subject});
    }
  }
  auto status = apply_event_in_place(state_.model, submit.event);
  if (!status) {
    return nack_to(sender, msg::Nack{submit.client_tag, wire::nack_reason_for(status.error().code), subject});
  }
  return sequence_and_broadcast(sender, submit.client_tag, submit.event);
}

Outbox Session::handle_grab(const UserId& user, const msg::GrabRequest& request) {
  if (!is_member(user)) return {};
  auto node = state_.model.classes.find(request.object);
  if (node == state_.model.classes.end()) {
    return nack_to(user, msg::Nack{std::nullopt, wire::NackReason::UnknownElement, request.object});
  }
  if (auto it = state_.ownership.find(request.object); it != state_.ownership.end()) {
    ++metrics_.denies;
    log({{"event", "grab_deny"}, {"user", user.to_string()}, {"object", request.object.to_string()}});
    Outbox out;
    out.push_back(Outgoing{user, share(msg::GrabDeny{request.object, it->second}), wire::Channel::Control});
    return out;
  }
  state_.ownership.emplace(request.object, user);
  state_.movement_seq.erase(request.object);
  state_.transient_pose.insert_or_assign(request.object, node->second.pose);
  movement_limiters_.insert_or_assign(request.object, RateLimiter(config_.movement_rate_limit));
  ++metrics_.grants;
  log({{"event", "grab_grant"}, {"user", user.to_string()}, {"object", request.object.to_string()}});
  return to_all(msg::GrabGrant{request.object, user});
}

Outbox Session::handle_movement(const UserId& sender, const wire::MovementPacket& packet, Millis now) {
  ++metrics_.movement_received;
  auto drop = [&](DropCause cause) {
    metrics_.movement_dropped.count(cause);
    log({{"event", "drop"}, {"channel", "movement"}, {"cause", std::string(to_string(cause))}, {"seq", packet.seq}});
    return Outbox{};
  };
  auto owner = state_.ownership.find(packet.subject);
  if (owner == state_.ownership.end() || owner->second != sender) return drop(DropCause::NotOwner);
  auto last = state_.movement_seq.find(packet.subject);
  const auto last_seq = last == state_.movement_seq.end() ? std::nullopt : std::optional(last->second);
  if (wire::fresher(last_seq, packet.seq) == wire::Freshness::Stale) return drop(DropCause::Stale);
  auto limiter = movement_limiters_.try_emplace(packet.subject, config_.movement_rate_limit).first;
  if (!limiter->second.try_take(now)) return drop(DropCause::RateLimited);

  state_.movement_seq.insert_or_assign(packet.subject, packet.seq);
  state_.transient_pose.insert_or_assign(packet.subject, packet.pose);
  ++metrics_.movement_forwarded;
  Outbox out;
  auto frame = std::make_shared<const wire::Frame>(wire::encode_movement(packet));
  for (const auto& [user, member] : state_.members) {
    if (user != sender) out.push_back(Outgoing{user, frame, wire::Channel::Movement});
  }
  return out;
}

Outbox Session::handle_presence(const UserId& sender, const wire::PresencePacket& packet, Millis now) {
  ++metrics_.presence_received;
  auto drop = [&](DropCause cause) {
    metrics_.presence_dropped.count(cause);
    log({{"event", "drop"}, {"channel", "presence"}, {"cause", std::string(to_string(cause))}, {"seq", packet.seq}});
    return Outbox{};
  };
  auto member = state_.members.find(sender);
  if (member == state_.members.end() || packet.user != sender) return drop(DropCause::NotOwner);
  const auto& last = member->second.last_presence;
  if (wire::fresher(last ? std::optional(last->seq) : std::nullopt, packet.seq) == wire::Freshness::Stale) {
    return drop(DropCause::Stale);
  }
  auto limiter = presence_limiters_.try_emplace(sender, config_.presence_rate_limit).first;
  if (!limiter->second.try_take(now)) return drop(DropCause::RateLimited);

  member->second.last_presence = packet;
  ++metrics_.presence_forwarded;
  Outbox out;
  auto frame = std::make_shared<const wire::Frame>(wire::encode_presence(packet));
  for (const auto& [user, m] : state_.members) {
    if (user != sender) out.push_back(Outgoing{user, frame, wire::Channel::Presence});
  }
  return out;
}

Outbox Session::handle_release(const UserId& user, const msg::Release& release) {
  auto owner = state_.ownership.find(release.object);
  if (owner == state_.ownership.end() || owner->second != user) {
    return nack_to(user, msg::Nack{std::nullopt, wire::NackReason::NotOwner, release.object});
  }
  events::CommitPose commit{release.object, release.final_pose};
  auto status = apply_event_in_place(state_.model, commit);
  if (!status) {
    return nack_to(user, msg::Nack{std::nullopt, wire::nack_reason_for(status.error().code), release.object});
  }
  return sequence_and_broadcast(user, std::nullopt, commit);
}

Outbox Session::handle_voice(const UserId& sender, const msg::VoiceFrame& frame) {
  if (!is_member(sender)) return {};
  msg::VoiceFrame relayed{sender, frame.data};
  Outbox out = to_all(relayed, &sender);
  metrics_.voice_relayed += out.size();
  return out;
}

Outbox Session::handle_disconnect(const UserId& user) {
  if (!is_member(user)) return {};
  state_.members.erase(user);
  presence_limiters_.erase(user);

  std::vector<ElementId> abandoned;
  for (const auto& [object, owner] : state_.ownership) {
    if (owner == user) abandoned.push_back(object);
  }
  Outbox out;
  for (const auto& object : abandoned) {
    const auto pose_it = state_.transient_pose.find(object);
    const Pose pose = pose_it != state_.transient_pose.end() ? pose_it->second : state_.model.classes.at(object).pose;
    events::CommitPose commit{object, pose};
    // The object exists (ownership is dropped on delete) and the pose was
    // validated on arrival, so this cannot fail.
    apply_event_in_place(state_.model, commit);
    auto broadcast = sequence_and_broadcast(user, std::nullopt, commit);
    out.insert(out.end(), broadcast.begin(), broadcast.end());
  }
  auto left = to_all(msg::PeerLeft{user});
  out.insert(out.end(), left.begin(), left.end());
  ++metrics_.leaves;
  log({{"event", "leave"}, {"user", user.to_string()}, {"released", abandoned.size()}});
  return out;
}

Outbox Session::handle_frame(const UserId& sender, std::span<const std::uint8_t> frame, Millis now) {
  if (!is_member(sender)) return {};
  auto decoded = wire::decode_frame(frame);
  if (!decoded) {
    ++metrics_.malformed_frames;
    log({{"event", "malformed"}, {"user", sender.to_string()}, {"error", std::string(wire::to_string(decoded.error()))}});
    return {};
  }
  if (const auto* movement = std::get_if<wire::MovementPacket>(&*decoded)) {
    return handle_movement(sender, *movement, now);
  }
  if (const auto* presence = std::get_if<wire::PresencePacket>(&*decoded)) {
    return handle_presence(sender, *presence, now);
  }
  const auto& control = std::get<wire::ControlMessage>(*decoded);
  if (const auto* m = std::get_if<msg::EventSubmit>(&control)) return handle_event(sender, *m);
  if (const auto* m = std::get_if<msg::GrabRequest>(&control)) return handle_grab(sender, *m);
  if (const auto* m = std::get_if<msg::Release>(&control)) return handle_release(sender, *m);
  if (const auto* m = std::get_if<msg::VoiceFrame>(&control)) return handle_voice(sender, *m);
  if (std::holds_alternative<msg::Leave>(control)) return handle_disconnect(sender);
  ++metrics_.malformed_frames;
  log({{"event", "unexpected"}, {"user", sender.to_string()}, {"type", std::string(wire::type_name(control))}});
  return {};
}

}  // namespace modelsync::server
