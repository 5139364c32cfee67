#include "modelsync/bot.hpp"

#include <algorithm>
#include <cmath>

#include "modelsync/spatial.hpp"

namespace modelsync::sim {

namespace msg = wire::msg;

namespace {

constexpr float kHeadHeight = 1.7F;
constexpr float kHandHeight = 1.2F;
constexpr float kHandOffset = 0.25F;

OutFrame control(const wire::ControlMessage& m) {
  return OutFrame{wire::encode_control(m), wire::channel_of(m)};
}

Micros millis(std::int64_t ms) { return Micros(ms * 1000); }

}  // namespace

BotDriver::BotDriver(BotScript script) : script_(std::move(script)) {}

bool BotDriver::blocked() const { return phase_ == Phase::Joining || awaiting_grab_.has_value(); }

std::optional<Micros> BotDriver::action_due() const {
  if (next_action_ >= script_.actions.size() || blocked() || motion_) return std::nullopt;
  Micros due = cursor_;
  if (const auto& at = script_.actions[next_action_].at_ms) due = std::max(due, millis(*at));
  return due;
}

bool BotDriver::done() const {
  if (phase_ == Phase::Left || phase_ == Phase::Rejected) return true;
  return next_action_ >= script_.actions.size() && !blocked() && !motion_;
}

std::optional<Micros> BotDriver::next_wakeup() const {
  if (phase_ == Phase::Left || phase_ == Phase::Rejected) return std::nullopt;
  std::optional<Micros> wake = action_due();
  auto consider = [&wake](Micros t) {
    if (!wake || t < *wake) wake = t;
  };
  if (motion_) consider(motion_->start + motion_->interval * (motion_->sent + 1));
  if (phase_ == Phase::Joined && script_.presence_hz > 0.0 && !done() && next_presence_) consider(*next_presence_);
  return wake;
}

void BotDriver::finish_action(Micros at) {
  cursor_ = at;
  ++next_action_;
}

void BotDriver::emit_presence(std::vector<OutFrame>& out) {
  if (!replica_) return;
  const Vec3 p = avatar_position_;
  wire::PresencePacket packet;
  packet.user = replica_->me();
  packet.seq = ++presence_seq_;
  packet.head = Pose::at(p.x, p.y + kHeadHeight, p.z);
  packet.left_hand = Pose::at(p.x + kHandOffset, p.y + kHandHeight, p.z);
  packet.right_hand = Pose::at(p.x - kHandOffset, p.y + kHandHeight, p.z);
  packet.right_gesture = replica_->held().empty() ? wire::GestureState::Relaxed : wire::GestureState::Grab;
  out.push_back(OutFrame{wire::encode_presence(packet), wire::Channel::Presence});
  ++stats_.presence_sent;
}

bool BotDriver::step_motion(Micros now, std::vector<OutFrame>& out) {
  if (!motion_) return false;
  Motion& m = *motion_;
  while (m.sent < m.steps && m.start + m.interval * (m.sent + 1) <= now) {
    ++m.sent;
    const Pose pose = m.sent == m.steps ? m.to : blend(m.from, m.to, double(m.sent) / m.steps);
    auto packet = replica_ ? replica_->move_held(m.object, pose) : std::nullopt;
    if (!packet) {
      // Hold lost mid-drag (object deleted); abandon the motion.
      ++stats_.skipped_actions;
      m.sent = m.steps;
      break;
    }
    out.push_back(OutFrame{wire::encode_movement(*packet), wire::Channel::Movement});
    ++stats_.movement_sent;
  }
  if (m.sent < m.steps) return false;
  motion_.reset();
  cursor_ = now;
  return true;
}

void BotDriver::run_actions(Micros now, std::vector<OutFrame>& out) {
  while (true) {
    auto due = action_due();
    if (!due || *due > now) return;
    const ActionBody& body = script_.actions[next_action_].body;

    if (std::holds_alternative<act::Join>(body)) {
      out.push_back(control(msg::Join{script_.name}));
      phase_ = Phase::Joining;
      ++next_action_;
      return;
    }
    if (const auto* wait = std::get_if<act::WaitMs>(&body)) {
      if (!waiting_) {
        waiting_ = true;
        cursor_ = *due + millis(wait->ms);
        if (cursor_ > now) return;
      }
      waiting_ = false;
      finish_action(cursor_);
      continue;
    }
    if (std::holds_alternative<act::Leave>(body)) {
      out.push_back(control(msg::Leave{}));
      phase_ = Phase::Left;
      next_action_ = script_.actions.size();
      return;
    }
    if (!replica_) {
      ++stats_.skipped_actions;
      finish_action(now);
      continue;
    }
    client::ClientReplica& r = *replica_;

    if (const auto* submit = std::get_if<act::SubmitEvent>(&body)) {
      auto result = r.submit_local(submit->event);
      if (result) {
        out.push_back(control(*result));
        ++stats_.events_submitted;
      } else {
        ++stats_.local_rejections;
      }
      finish_action(now);
    } else if (const auto* grab = std::get_if<act::Grab>(&body)) {
      if (r.holds(grab->object)) {
        finish_action(now);
      } else {
        out.push_back(control(msg::GrabRequest{grab->object}));
        awaiting_grab_ = grab->object;
        ++next_action_;
        return;
      }
    } else if (const auto* move = std::get_if<act::MoveTo>(&body)) {
      if (!r.holds(move->object)) {
        ++stats_.skipped_actions;
        finish_action(now);
        continue;
      }
      Motion m;
      m.object = move->object;
      m.from = r.effective_pose(move->object).value_or(Pose::identity());
      m.to = move->pose;
      m.start = now;
      m.steps = static_cast<std::uint32_t>(
          std::max<long long>(1, std::llround(double(move->duration_ms) * move->rate_hz / 1000.0)));
      m.interval = Micros(move->duration_ms * 1000 / m.steps);
      motion_ = m;
      ++next_action_;
      step_motion(now, out);
    } else if (const auto* release = std::get_if<act::Release>(&body)) {
      if (auto m = r.release_held(release->object, release->pose)) {
        out.push_back(control(*m));
      } else {
        ++stats_.skipped_actions;
      }
      finish_action(now);
    } else if (const auto* speak = std::get_if<act::Speak>(&body)) {
      out.push_back(control(msg::VoiceFrame{std::nullopt, speak->data}));
      ++stats_.voice_sent;
      finish_action(now);
    } else if (const auto* teleport = std::get_if<act::Teleport>(&body)) {
      if (auto target = spatial::teleport_target(teleport->controller, teleport->max_range)) {
        avatar_position_ = *target;
        if (phase_ == Phase::Joined) emit_presence(out);
      } else {
        ++stats_.skipped_actions;
      }
      finish_action(now);
    }
  }
}

std::vector<OutFrame> BotDriver::poll(Micros now) {
  std::vector<OutFrame> out;
  if (phase_ == Phase::Left || phase_ == Phase::Rejected) return out;
  step_motion(now, out);
  run_actions(now, out);
  if (phase_ == Phase::Joined && script_.presence_hz > 0.0 && !done() && next_presence_ &&
      *next_presence_ <= now) {
    emit_presence(out);
    const auto interval = Micros(static_cast<std::int64_t>(std::llround(1e6 / script_.presence_hz)));
    next_presence_ = *next_presence_ + interval;
    if (*next_presence_ <= now) next_presence_ = now + interval;
  }
  return out;
}

void BotDriver::on_frame(std::span<const std::uint8_t> frame, Micros now) {
  if (phase_ == Phase::Left || phase_ == Phase::Rejected) return;
  auto decoded = wire::decode_frame(frame);
  if (!decoded) return;

  if (const auto* movement = std::get_if<wire::MovementPacket>(&*decoded)) {
    if (replica_ && replica_->on_movement(*movement)) ++stats_.movement_applied;
    return;
  }
  if (const auto* presence = std::get_if<wire::PresencePacket>(&*decoded)) {
    if (replica_) replica_->on_presence(*presence);
    return;
  }
  const auto& message = std::get<wire::ControlMessage>(*decoded);

  if (phase_ == Phase::Joining) {
    if (const auto* welcome = std::get_if<msg::Welcome>(&message)) {
      replica_ = client::ClientReplica::from_welcome(*welcome);
      phase_ = Phase::Joined;
      stats_.welcome_last_seq = welcome->last_seq;
      cursor_ = now;
      next_presence_ = now;
    } else if (const auto* nack = std::get_if<msg::Nack>(&message); nack && nack->reason == wire::NackReason::SessionFull) {
      phase_ = Phase::Rejected;
    }
    return;
  }
  if (!replica_) return;

  if (std::holds_alternative<msg::EventBroadcast>(message)) ++stats_.broadcasts_observed;
  if (!replica_->on_control(message)) ++stats_.order_violations;
  replica_->take_voice();

  if (const auto* nack = std::get_if<msg::Nack>(&message)) {
    ++stats_.nacks;
    if (awaiting_grab_ && nack->object == awaiting_grab_) {
      awaiting_grab_.reset();
      cursor_ = now;
    }
  } else if (const auto* grant = std::get_if<msg::GrabGrant>(&message)) {
    if (awaiting_grab_ && grant->object == *awaiting_grab_ && grant->owner == replica_->me()) {
      ++stats_.grants;
      awaiting_grab_.reset();
      cursor_ = now;
    }
  } else if (const auto* deny = std::get_if<msg::GrabDeny>(&message)) {
    if (awaiting_grab_ && deny->object == *awaiting_grab_) {
      ++stats_.denies;
      awaiting_grab_.reset();
      cursor_ = now;
    }
  } else if (std::holds_alternative<msg::VoiceFrame>(message)) {
    ++stats_.voice_received;
  }
  replica_->take_diagnostics();
}

}  // namespace modelsync::sim
