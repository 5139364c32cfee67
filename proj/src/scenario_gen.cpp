#include "modelsync/scenario_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace modelsync::sim {

namespace {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }
  std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng_); }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool chance(double p) { return real(0.0, 1.0) < p; }

  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[below(items.size())];
  }

  Pose pose() {
    const auto yaw = real(-std::numbers::pi, std::numbers::pi);
    return {{float(real(-6.0, 6.0)), float(real(0.0, 2.5)), float(real(-6.0, 6.0))},
            Quat::from_axis_angle({0.0F, 1.0F, 0.0F}, yaw)};
  }

  Pose controller() {
    // Downward-tilted aim from head height; most rays land within range.
    const double yaw = real(-std::numbers::pi, std::numbers::pi);
    const double pitch = real(0.1, 1.2);
    const Quat q = Quat::from_axis_angle({0.0F, 1.0F, 0.0F}, yaw) * Quat::from_axis_angle({1.0F, 0.0F, 0.0F}, pitch);
    return {{float(real(-4.0, 4.0)), 1.6F, float(real(-4.0, 4.0))}, q};
  }

 private:
  std::mt19937_64 rng_;
};

Action now(ActionBody body) { return Action{std::nullopt, std::move(body)}; }

const std::vector<std::string> kNames = {"Vehicle", "Car",   "Engine", "Wheel",   "Driver", "Garage",
                                         "Route",   "Trip",  "Ticket", "Station", "Größe",  "Fahrer",
                                         "Account", "Owner", "Policy", "Claim"};

std::string class_name(Gen& g) {
  std::string name = g.pick(kNames);
  if (g.chance(0.5)) name += std::to_string(g.below(100));
  return name;
}

std::vector<std::string> lines(Gen& g, const char* prefix) {
  std::vector<std::string> out(g.below(4));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::string(prefix) + std::to_string(g.below(1000)) + ": int";
  return out;
}

}  // namespace

GeneratedScenario random_scenario(std::uint64_t seed, const RandomLimits& limits) {
  Gen g(seed ^ 0xC0FFEE1234ULL);
  GeneratedScenario out;
  constexpr double kLoss[] = {0.0, 0.1, 0.3};
  out.net.seed = seed;
  out.net.movement_loss_prob = kLoss[g.below(3)];
  out.net.base_latency_ms = double(g.between(0, 300));
  out.net.jitter_ms = double(g.between(0, 100));

  const std::size_t bots = std::size_t(g.between(std::int64_t(limits.min_bots), std::int64_t(limits.max_bots)));
  const std::size_t event_share = limits.max_events / bots;
  const std::size_t movement_share = limits.max_movement / bots;

  // Ids the bots will refer to. Classes are created by whoever draws them;
  // edits on ids a bot has not yet seen fail its local check and are skipped.
  std::vector<ElementId> classes;
  std::vector<ElementId> connectors;
  for (int i = 0; i < 24; ++i) classes.push_back(ElementId::random(g.rng()));
  for (int i = 0; i < 24; ++i) connectors.push_back(ElementId::random(g.rng()));

  for (std::size_t b = 0; b < bots; ++b) {
    BotScript bot;
    bot.name = "bot" + std::to_string(b);
    bot.presence_hz = g.chance(0.7) ? 20.0 : 0.0;
    const std::int64_t join_at = g.chance(0.25) ? g.between(500, 4000) : g.between(0, 200);
    bot.actions.push_back(Action{join_at, act::Join{}});

    const std::size_t target_events = std::size_t(g.between(std::int64_t(event_share / 2), std::int64_t(event_share)));
    std::size_t events = 0;
    std::size_t movement = 0;
    while (events < target_events) {
      bot.actions.push_back(now(act::WaitMs{g.between(0, 250)}));
      const auto roll = g.below(100);
      const ElementId cls = g.pick(classes);
      if (roll < 22) {
        bot.actions.push_back(now(act::SubmitEvent{events::CreateClass{cls, class_name(g), g.pose()}}));
      } else if (roll < 34) {
        bot.actions.push_back(now(act::SubmitEvent{events::RenameClass{cls, class_name(g)}}));
      } else if (roll < 42) {
        bot.actions.push_back(now(act::SubmitEvent{events::SetAttributes{cls, lines(g, "- a")}}));
      } else if (roll < 50) {
        bot.actions.push_back(now(act::SubmitEvent{events::SetMethods{cls, lines(g, "+ m")}}));
      } else if (roll < 62) {
        const auto kind = kAllConnectorKinds[g.below(std::size(kAllConnectorKinds))];
        bot.actions.push_back(
            now(act::SubmitEvent{events::CreateConnector{g.pick(connectors), kind, cls, g.pick(classes)}}));
      } else if (roll < 67) {
        bot.actions.push_back(now(act::SubmitEvent{events::DeleteConnector{g.pick(connectors)}}));
      } else if (roll < 70) {
        bot.actions.push_back(now(act::SubmitEvent{events::DeleteClass{cls}}));
      } else if (roll < 74) {
        bot.actions.push_back(now(act::SubmitEvent{events::CommitPose{cls, g.pose()}}));
      } else if (roll < 88) {
        const std::int64_t duration = g.between(200, 1500);
        const double rate = g.chance(0.8) ? 20.0 : 30.0;
        const auto steps = std::size_t(std::max<long long>(1, std::llround(double(duration) * rate / 1000.0)));
        if (movement + steps > movement_share) continue;
        movement += steps;
        bot.actions.push_back(now(act::Grab{cls}));
        bot.actions.push_back(now(act::MoveTo{cls, g.pose(), duration, rate}));
        std::optional<Pose> final_pose;
        if (g.chance(0.5)) final_pose = g.pose();
        bot.actions.push_back(now(act::Release{cls, final_pose}));
      } else if (roll < 94) {
        bot.actions.push_back(now(act::Speak{std::vector<std::uint8_t>(std::size_t(g.between(1, 320)), 0x5A)}));
        continue;
      } else {
        bot.actions.push_back(now(act::Teleport{g.controller(), 20.0}));
        continue;
      }
      ++events;
    }
    const auto ending = g.below(10);
    if (ending == 0 && movement + 10 <= movement_share) {
      // Walk away mid-drag; the server commits the abandoned pose.
      const ElementId cls = g.pick(classes);
      bot.actions.push_back(now(act::Grab{cls}));
      bot.actions.push_back(now(act::MoveTo{cls, g.pose(), 500, 20.0}));
      bot.actions.push_back(now(act::Leave{}));
    } else if (ending < 3) {
      bot.actions.push_back(now(act::Leave{}));
    }
    out.scenario.bots.push_back(std::move(bot));
  }
  return out;
}

GeneratedScenario late_join_scenario(std::uint64_t seed, std::size_t min_events) {
  Gen g(seed ^ 0x1A7E501ULL);
  GeneratedScenario out;
  out.net.seed = seed;
  out.net.base_latency_ms = double(g.between(0, 300));
  out.net.jitter_ms = double(g.between(0, 100));
  out.net.movement_loss_prob = g.chance(0.5) ? 0.1 : 0.0;

  // Every builder event targets its own classes, so none is ever refused.
  BotScript builder{"builder", 20.0, {Action{0, act::Join{}}}};
  std::vector<ElementId> own;
  std::size_t events = 0;
  auto submit = [&](ModelEvent e) {
    builder.actions.push_back(now(act::WaitMs{g.between(0, 20)}));
    builder.actions.push_back(now(act::SubmitEvent{std::move(e)}));
    ++events;
  };
  const std::size_t class_count = 30;
  for (std::size_t i = 0; i < class_count; ++i) {
    own.push_back(ElementId::random(g.rng()));
    submit(events::CreateClass{own.back(), "C" + std::to_string(i), g.pose()});
  }
  std::size_t connector_index = 0;
  while (events < min_events) {
    const ElementId cls = g.pick(own);
    switch (g.below(5)) {
      case 0:
        submit(events::RenameClass{cls, class_name(g)});
        break;
      case 1:
        submit(events::SetAttributes{cls, lines(g, "- a")});
        break;
      case 2:
        submit(events::SetMethods{cls, lines(g, "+ m")});
        break;
      case 3:
        own.push_back(ElementId::random(g.rng()));
        submit(events::CreateClass{own.back(), "C" + std::to_string(own.size() - 1), g.pose()});
        break;
      default:
        submit(events::CreateConnector{ElementId::from_label("late-conn-" + std::to_string(connector_index++)),
                                       kAllConnectorKinds[g.below(std::size(kAllConnectorKinds))], cls, g.pick(own)});
        break;
    }
  }
  // Continues after the late join so the joiner also consumes live traffic.
  builder.actions.push_back(Action{12000, act::WaitMs{0}});
  for (int i = 0; i < 20; ++i) submit(events::RenameClass{g.pick(own), class_name(g)});

  BotScript witness{"witness", 20.0, {Action{0, act::Join{}}}};
  witness.actions.push_back(Action{15000, act::WaitMs{0}});

  BotScript late{"late", 20.0, {Action{10000, act::Join{}}}};
  late.actions.push_back(Action{15000, act::WaitMs{0}});

  out.scenario.bots = {std::move(builder), std::move(witness), std::move(late)};
  return out;
}

GrabReleaseCase grab_release_scenario(std::uint64_t seed, double movement_loss) {
  Gen g(seed ^ 0x6AB5ULL);
  GrabReleaseCase out;
  out.generated.net = {double(g.between(0, 300)), double(g.between(0, 100)), movement_loss, seed};
  out.object = ElementId::random(g.rng());
  out.release_pose = g.pose();

  BotScript mover{"mover", 20.0, {Action{0, act::Join{}}}};
  mover.actions.push_back(now(act::SubmitEvent{events::CreateClass{out.object, "Dragged", g.pose()}}));
  mover.actions.push_back(Action{1000, act::Grab{out.object}});
  mover.actions.push_back(now(act::MoveTo{out.object, g.pose(), g.between(1000, 3000), 20.0}));
  mover.actions.push_back(now(act::Release{out.object, out.release_pose}));

  BotScript watcher{"watcher", 20.0, {Action{0, act::Join{}}}};
  watcher.actions.push_back(Action{4000, act::WaitMs{0}});

  out.generated.scenario.bots = {std::move(mover), std::move(watcher)};
  return out;
}

GeneratedScenario grab_race_scenario(std::uint64_t seed, std::size_t contenders) {
  Gen g(seed ^ 0x4ACEULL);
  GeneratedScenario out;
  out.net = {double(g.between(0, 100)), double(g.between(0, 50)), 0.0, seed};
  const ElementId object = ElementId::from_label(kRaceObjectLabel);

  BotScript creator{"creator", 0.0, {Action{0, act::Join{}}}};
  creator.actions.push_back(now(act::SubmitEvent{events::CreateClass{object, "Contested", Pose::identity()}}));
  out.scenario.bots.push_back(std::move(creator));

  for (std::size_t i = 0; i < contenders; ++i) {
    BotScript bot{"contender" + std::to_string(i), 0.0, {Action{0, act::Join{}}}};
    bot.actions.push_back(Action{2000, act::Grab{object}});
    out.scenario.bots.push_back(std::move(bot));
  }
  return out;
}

}  // namespace modelsync::sim
