#include <doctest.h>

#include "modelsync/bot.hpp"
#include "modelsync/scenario.hpp"
#include "support.hpp"

using namespace modelsync;
using namespace modelsync::sim;
using nlohmann::json;
using testing::id;

namespace {

Action at(std::int64_t ms, ActionBody body) { return Action{ms, std::move(body)}; }
Action now(ActionBody body) { return Action{std::nullopt, std::move(body)}; }

wire::msg::Welcome welcome_for(const UserId& me) {
  wire::msg::Welcome w;
  w.session = SessionId::from_label("s");
  w.user_id = me;
  w.members = {{me, "bot"}};
  return w;
}

std::vector<wire::ControlMessage> controls(const std::vector<OutFrame>& frames) {
  std::vector<wire::ControlMessage> out;
  for (const auto& f : frames) {
    if (auto m = wire::decode_control(f.frame)) out.push_back(*m);
  }
  return out;
}

}  // namespace

TEST_CASE("scenario JSON") {
  const json j = json::parse(R"({
    "bots": [{
      "name": "alice",
      "presence_hz": 10,
      "actions": [
        {"action": "Join", "at_ms": 0},
        {"action": "SubmitEvent", "event": {"op": "CreateClass", "id": "Vehicle", "name": "Vehicle"}},
        {"action": "Grab", "object": "Vehicle"},
        {"action": "MoveTo", "object": "Vehicle", "pose": {"position": {"x": 1, "y": 0, "z": 0},
                                                           "orientation": {"x": 0, "y": 0, "z": 0, "w": 1}}},
        {"action": "Release", "object": "Vehicle"},
        {"action": "Speak", "data": "AQID"},
        {"action": "WaitMs", "ms": 50},
        {"action": "Leave"}
      ]}]})");
  auto s = scenario_from_json(j);
  REQUIRE(s);
  REQUIRE(s->bots.size() == 1);
  const BotScript& bot = s->bots[0];
  CHECK(bot.presence_hz == 10.0);
  REQUIRE(bot.actions.size() == 8);
  const auto& create = std::get<events::CreateClass>(std::get<act::SubmitEvent>(bot.actions[1].body).event);
  CHECK(create.id == ElementId::from_label("Vehicle"));
  CHECK(create.pose == Pose::identity());
  const auto& move = std::get<act::MoveTo>(bot.actions[3].body);
  CHECK(move.duration_ms == 1000);
  CHECK(move.rate_hz == 20.0);
  CHECK(std::get<act::Speak>(bot.actions[5].body).data == std::vector<std::uint8_t>{1, 2, 3});

  auto again = scenario_from_json(to_json(*s));
  REQUIRE(again);
  CHECK(again->bots[0].actions == bot.actions);
}

TEST_CASE("scenario validation") {
  auto invalid = [](BotScript bot) { return !validate(Scenario{{std::move(bot)}}); };
  CHECK(invalid({"a", 0, {at(100, act::Join{}), at(50, act::Leave{})}}));
  CHECK(invalid({"a", 0, {now(act::Grab{id("x")})}}));
  CHECK(invalid({"a", 0, {now(act::Join{}), now(act::Join{})}}));
  CHECK(invalid({"a", 0, {now(act::Join{}), now(act::Leave{}), now(act::WaitMs{1})}}));
  CHECK(invalid({"", 0, {now(act::Join{})}}));
  CHECK(invalid({"a", -1, {now(act::Join{})}}));
  CHECK(invalid({"a", 0, {now(act::Join{}), now(act::MoveTo{id("x"), Pose::identity(), 100, 0.0})}}));
  CHECK_FALSE(invalid({"a", 0, {now(act::WaitMs{10}), at(10, act::Join{}), at(10, act::Leave{})}}));
  CHECK_FALSE(validate(Scenario{}));
  CHECK_FALSE(scenario_from_json(json::parse(R"({"bots":[{"name":"a","actions":[{"action":"Dance"}]}]})")));
  CHECK_FALSE(scenario_from_json(json::parse(R"([])")));
}

TEST_CASE("bot driver blocks on join and grab") {
  BotScript script{"bot", 0.0,
                   {at(0, act::Join{}), now(act::SubmitEvent{events::CreateClass{id("A"), "A", {}}}),
                    now(act::Grab{id("A")}), now(act::MoveTo{id("A"), Pose::at(2, 0, 0), 100, 20.0}),
                    now(act::Release{id("A"), std::nullopt})}};
  BotDriver d(script);
  const UserId me = UserId::from_label("me");

  auto out = d.poll(Micros(0));
  REQUIRE(controls(out).size() == 1);
  CHECK(std::holds_alternative<wire::msg::Join>(controls(out)[0]));
  CHECK(d.phase() == BotDriver::Phase::Joining);
  CHECK(d.poll(Micros(5000)).empty());

  d.on_frame(wire::encode_control(welcome_for(me)), Micros(10000));
  CHECK(d.phase() == BotDriver::Phase::Joined);
  out = d.poll(Micros(10000));
  auto c = controls(out);
  REQUIRE(c.size() == 2);
  CHECK(std::holds_alternative<wire::msg::EventSubmit>(c[0]));
  CHECK(std::holds_alternative<wire::msg::GrabRequest>(c[1]));
  CHECK(d.poll(Micros(20000)).empty());

  d.on_frame(wire::encode_control(wire::msg::EventBroadcast{1, me, 1, events::CreateClass{id("A"), "A", {}}}),
             Micros(20000));
  d.on_frame(wire::encode_control(wire::msg::GrabGrant{id("A"), me}), Micros(30000));
  // 100 ms at 20 Hz: two movement packets, the last one at the target.
  std::size_t movement = 0;
  std::optional<wire::msg::Release> release;
  for (std::int64_t t = 30000; t <= 200000; t += 10000) {
    for (const auto& f : d.poll(Micros(t))) {
      if (f.channel == wire::Channel::Movement) {
        ++movement;
        auto p = wire::decode_movement(f.frame);
        REQUIRE(p);
        if (movement == 2) CHECK(p->pose == Pose::at(2, 0, 0));
      } else if (auto m = wire::decode_control(f.frame)) {
        if (auto* r = std::get_if<wire::msg::Release>(&*m)) release = *r;
      }
    }
  }
  CHECK(movement == 2);
  REQUIRE(release);
  CHECK(release->final_pose == Pose::at(2, 0, 0));
  CHECK(d.done());
}

TEST_CASE("bot driver is rejected when the session is full") {
  BotDriver d({"bot", 20.0, {at(0, act::Join{}), now(act::WaitMs{100})}});
  d.poll(Micros(0));
  d.on_frame(wire::encode_control(wire::msg::Nack{std::nullopt, wire::NackReason::SessionFull, std::nullopt}),
             Micros(1000));
  CHECK(d.phase() == BotDriver::Phase::Rejected);
  CHECK(d.done());
  CHECK_FALSE(d.next_wakeup());
}

TEST_CASE("bot driver presence cadence") {
  BotDriver d({"bot", 20.0, {at(0, act::Join{}), now(act::WaitMs{1000})}});
  d.poll(Micros(0));
  d.on_frame(wire::encode_control(welcome_for(UserId::from_label("me"))), Micros(0));
  std::size_t presence = 0;
  while (auto wake = d.next_wakeup()) {
    for (const auto& f : d.poll(*wake)) presence += f.channel == wire::Channel::Presence;
    if (*wake > Micros(5'000'000)) break;
  }
  // One packet at t = 0, then every 50 ms until the script ends at 1 s.
  CHECK(presence == 20);
  CHECK(d.done());
}
