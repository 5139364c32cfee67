#include "modelsync/sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "modelsync/canonical_json.hpp"
#include "modelsync/model_json.hpp"

namespace modelsync::sim {

namespace {

using nlohmann::json;

// Guards against scripts that never go quiet (e.g. a bot waiting forever).
constexpr Micros kMaxVirtualTime = std::chrono::hours(48);

std::string phase_name(BotDriver::Phase phase) {
  switch (phase) {
    case BotDriver::Phase::Idle:
      return "idle";
    case BotDriver::Phase::Joining:
      return "joining";
    case BotDriver::Phase::Joined:
      return "joined";
    case BotDriver::Phase::Rejected:
      return "rejected";
    case BotDriver::Phase::Left:
      return "left";
  }
  return "unknown";
}

json bytes_json(const ChannelBytes& b) {
  return {{"control", b.control}, {"movement", b.movement}, {"presence", b.presence}, {"voice", b.voice}};
}

json drops_json(const server::DropCounts& d) {
  return {{"not_owner", d.not_owner}, {"stale", d.stale}, {"rate_limited", d.rate_limited}};
}

json stream_json(const StreamCounts& s) {
  return {{"sent", s.sent},       {"lost_uplink", s.lost_uplink}, {"late_uplink", s.late_uplink},     {"received", s.received},
          {"forwarded", s.forwarded}, {"dropped", drops_json(s.dropped)}, {"fanout", s.fanout},
          {"lost_downlink", s.lost_downlink}, {"delivered", s.delivered}, {"late_downlink", s.late_downlink}};
}

template <class Node>
void diff_collection(const std::map<ElementId, Node>& a, const std::map<ElementId, Node>& b,
                     const char* what, std::ostringstream& out) {
  std::set<ElementId> ids;
  for (const auto& [id, n] : a) ids.insert(id);
  for (const auto& [id, n] : b) ids.insert(id);
  for (const auto& id : ids) {
    auto ia = a.find(id);
    auto ib = b.find(id);
    if (ib == b.end()) {
      out << what << ' ' << id.to_string() << ": only in first\n";
    } else if (ia == a.end()) {
      out << what << ' ' << id.to_string() << ": only in second\n";
    } else {
      const json ja = json_io::to_json(ia->second);
      const json jb = json_io::to_json(ib->second);
      for (const auto& [key, value] : ja.items()) {
        const std::string va = canonical_dump(value);
        const std::string vb = canonical_dump(jb.at(key));
        if (va != vb) out << what << ' ' << id.to_string() << ": " << key << " differs " << va << " vs " << vb << '\n';
      }
    }
  }
}

}  // namespace

bool NetConfig::valid() const {
  return std::isfinite(base_latency_ms) && base_latency_ms >= 0.0 && std::isfinite(jitter_ms) &&
         jitter_ms >= 0.0 && movement_loss_prob >= 0.0 && movement_loss_prob <= 1.0;
}

void ChannelBytes::add(wire::Channel channel, std::size_t bytes) {
  switch (channel) {
    case wire::Channel::Control:
      control += bytes;
      break;
    case wire::Channel::Movement:
      movement += bytes;
      break;
    case wire::Channel::Presence:
      presence += bytes;
      break;
    case wire::Channel::Voice:
      voice += bytes;
      break;
  }
}

json SimReport::to_json() const {
  json bot_list = json::array();
  for (const auto& b : bots) {
    json j{{"name", b.name},
           {"phase", b.phase},
           {"last_applied_seq", b.last_applied_seq},
           {"pending", b.pending},
           {"order_violations", b.order_violations},
           {"matches_server", b.matches_server}};
    j["welcome_last_seq"] = b.welcome_last_seq ? json(*b.welcome_last_seq) : json(nullptr);
    bot_list.push_back(std::move(j));
  }
  return {{"converged", converged},
          {"final_diff", final_diff},
          {"events_broadcast", events_broadcast},
          {"nacks", nacks},
          {"grants", grants},
          {"denies", denies},
          {"order_violations", order_violations},
          {"voice_relayed", voice_relayed},
          {"movement_sent", movement.sent},
          {"movement_forwarded", movement.forwarded},
          {"movement_dropped", drops_json(movement.dropped)},
          {"movement", stream_json(movement)},
          {"presence", stream_json(presence)},
          {"bytes_per_channel", bytes_json(bytes_per_channel)},
          {"downlink_bytes_per_channel", bytes_json(downlink_bytes_per_channel)},
          {"sim_duration_ms", sim_duration_ms},
          {"bots", std::move(bot_list)}};
}

std::optional<std::string> diff_models(const ClassModel& a, const ClassModel& b) {
  if (canonical_model_bytes(a) == canonical_model_bytes(b)) return std::nullopt;
  std::ostringstream out;
  diff_collection(a.classes, b.classes, "class", out);
  diff_collection(a.connectors, b.connectors, "connector", out);
  return out.str();
}

Simulator::Simulator(Scenario scenario, NetConfig net, server::ServerConfig config)
    : net_(net),
      session_([&] {
        std::mt19937_64 ids(net.seed ^ 0x5E55101DULL);
        return SessionId::random(ids);
      }(), config, net.seed),
      rng_(net.seed) {
  bots_.reserve(scenario.bots.size());
  for (auto& script : scenario.bots) bots_.push_back(BotSlot{BotDriver(std::move(script)), {}, {}, {}, {}});
  for (std::size_t i = 0; i < bots_.size(); ++i) service_bot(i);
}

double Simulator::uniform01() { return double(rng_() >> 11) * 0x1.0p-53; }

Micros Simulator::sample_latency() {
  const double jitter = net_.jitter_ms > 0.0 ? (uniform01() * 2.0 - 1.0) * net_.jitter_ms : 0.0;
  const double ms = std::max(0.0, net_.base_latency_ms + jitter);
  return Micros(static_cast<std::int64_t>(std::llround(ms * 1000.0)));
}

StreamCounts& Simulator::stream(wire::Channel channel) {
  return channel == wire::Channel::Presence ? presence_ : movement_;
}

void Simulator::send(Direction direction, std::size_t bot, std::shared_ptr<const wire::Frame> frame,
                     wire::Channel channel) {
  const bool lossy = wire::is_lossy(channel);
  (direction == Direction::Uplink ? uplink_bytes_ : downlink_bytes_).add(channel, frame->size());
  if (lossy) {
    StreamCounts& s = stream(channel);
    ++(direction == Direction::Uplink ? s.sent : s.fanout);
    if (net_.movement_loss_prob > 0.0 && uniform01() < net_.movement_loss_prob) {
      ++(direction == Direction::Uplink ? s.lost_uplink : s.lost_downlink);
      return;
    }
  }
  Micros at = now_ + sample_latency();
  if (!lossy) {
    Link& link = direction == Direction::Uplink ? bots_[bot].uplink : bots_[bot].downlink;
    at = std::max(at, link.last_reliable);
    link.last_reliable = at;
  }
  Item item;
  item.at = at;
  item.order = order_++;
  item.kind = ItemKind::Deliver;
  item.direction = direction;
  item.bot = bot;
  item.channel = channel;
  item.send_index = send_index_++;
  item.frame = std::move(frame);
  queue_.push(std::move(item));
}

void Simulator::inject(Direction direction, std::size_t bot, wire::Frame frame, wire::Channel channel) {
  send(direction, bot, std::make_shared<const wire::Frame>(std::move(frame)), channel);
}

void Simulator::service_bot(std::size_t bot) {
  BotSlot& slot = bots_[bot];
  for (auto& out : slot.driver.poll(now_)) {
    send(Direction::Uplink, bot, std::make_shared<const wire::Frame>(std::move(out.frame)), out.channel);
  }
  const auto wake = slot.driver.next_wakeup();
  if (wake && (!slot.scheduled_wake || *wake < *slot.scheduled_wake)) {
    Item item;
    item.at = std::max(*wake, now_);
    item.order = order_++;
    item.kind = ItemKind::Wake;
    item.bot = bot;
    slot.scheduled_wake = item.at;
    queue_.push(std::move(item));
  }
}

void Simulator::route(const server::Outbox& out) {
  for (const auto& o : out) {
    auto it = bot_of_user_.find(o.to);
    if (it != bot_of_user_.end()) send(Direction::Downlink, it->second, o.frame, o.channel);
  }
}

void Simulator::deliver(const Item& item) {
  if (record_) delivery_log_.push_back(Delivery{now_, item.direction, item.bot, item.channel, item.send_index});
  BotSlot& slot = bots_[item.bot];
  if (item.direction == Direction::Downlink) {
    const auto phase = slot.driver.phase();
    if (phase == BotDriver::Phase::Left || phase == BotDriver::Phase::Rejected) {
      if (wire::is_lossy(item.channel)) ++stream(item.channel).late_downlink;
      return;
    }
    if (wire::is_lossy(item.channel)) ++stream(item.channel).delivered;
    slot.driver.on_frame(*item.frame, now_);
    service_bot(item.bot);
    return;
  }

  const server::Millis now_ms(now_.count() / 1000);
  if (!slot.user) {
    auto decoded = wire::decode_control(*item.frame);
    if (!decoded) return;
    const auto* join = std::get_if<wire::msg::Join>(&*decoded);
    if (join == nullptr) return;
    auto joined = session_.handle_join(join->display_name);
    if (!joined) {
      wire::msg::Nack nack{std::nullopt, wire::NackReason::SessionFull, std::nullopt};
      send(Direction::Downlink, item.bot, std::make_shared<const wire::Frame>(wire::encode_control(nack)),
           wire::Channel::Control);
      return;
    }
    slot.user = joined->user;
    bot_of_user_[joined->user] = item.bot;
    route(joined->out);
    return;
  }
  if (wire::is_lossy(item.channel) && !session_.state().members.contains(*slot.user)) {
    ++stream(item.channel).late_uplink;
    return;
  }
  route(session_.handle_frame(*slot.user, *item.frame, now_ms));
}

bool Simulator::step() {
  if (queue_.empty()) return false;
  Item item = queue_.top();
  queue_.pop();
  now_ = item.at;
  if (item.kind == ItemKind::Wake) {
    BotSlot& slot = bots_[item.bot];
    if (slot.scheduled_wake == item.at) slot.scheduled_wake.reset();
    service_bot(item.bot);
  } else {
    deliver(item);
  }
  return true;
}

void Simulator::run_to_quiescence() {
  while (now_ <= kMaxVirtualTime && step()) {
  }
}

SimReport Simulator::report() const {
  SimReport r;
  const auto& metrics = session_.metrics();
  const ClassModel& reference = session_.state().model;
  const std::string reference_bytes = canonical_model_bytes(reference);

  r.events_broadcast = metrics.events_broadcast;
  r.nacks = metrics.nacks;
  r.grants = metrics.grants;
  r.denies = metrics.denies;
  r.voice_relayed = metrics.voice_relayed;
  r.movement = movement_;
  r.movement.received = metrics.movement_received;
  r.movement.forwarded = metrics.movement_forwarded;
  r.movement.dropped = metrics.movement_dropped;
  r.presence = presence_;
  r.presence.received = metrics.presence_received;
  r.presence.forwarded = metrics.presence_forwarded;
  r.presence.dropped = metrics.presence_dropped;
  r.bytes_per_channel = uplink_bytes_;
  r.downlink_bytes_per_channel = downlink_bytes_;
  r.sim_duration_ms = double(now_.count()) / 1000.0;

  bool converged = queue_.empty();
  std::ostringstream diff;
  if (!converged) diff << "simulation did not reach quiescence\n";
  for (const auto& slot : bots_) {
    const BotDriver& d = slot.driver;
    BotSummary s;
    s.name = d.script().name;
    s.phase = phase_name(d.phase());
    s.welcome_last_seq = d.stats().welcome_last_seq;
    s.order_violations = d.stats().order_violations;
    r.order_violations += s.order_violations;
    if (d.replica()) {
      s.last_applied_seq = d.replica()->last_applied_seq();
      s.pending = d.replica()->pending().size();
    }
    if (d.phase() == BotDriver::Phase::Joined && d.replica()) {
      const auto& replica = *d.replica();
      s.matches_server = s.pending == 0 && s.last_applied_seq == session_.last_seq() &&
                         canonical_model_bytes(replica.committed()) == reference_bytes;
      if (!s.matches_server) {
        converged = false;
        diff << "bot " << s.name << ": last_applied_seq=" << s.last_applied_seq
             << " server_seq=" << session_.last_seq() << " pending=" << s.pending << '\n';
        if (auto d2 = diff_models(reference, replica.committed())) diff << *d2;
      }
    }
    r.bots.push_back(std::move(s));
  }
  r.converged = converged;
  r.final_diff = diff.str();
  return r;
}

Result<SimReport, ScenarioInvalid> run(const Scenario& scenario, const NetConfig& net,
                                       const server::ServerConfig& config) {
  if (auto status = validate(scenario); !status) return fail(status.error());
  if (!net.valid()) return fail(ScenarioInvalid{"invalid network configuration"});
  Simulator sim(scenario, net, config);
  sim.run_to_quiescence();
  return sim.report();
}

}  // namespace modelsync::sim
