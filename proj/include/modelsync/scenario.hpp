#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "modelsync/ids.hpp"
#include "modelsync/model.hpp"
#include "modelsync/pose.hpp"
#include "modelsync/result.hpp"

// Scripted collaborator behaviour, shared by the simulator and live bots.
// Ids in scenario files may be UUIDs or free labels ("Vehicle"), which map to
// fixed UUIDs.
namespace modelsync::sim {

namespace act {

struct Join {
  friend bool operator==(const Join&, const Join&) = default;
};
struct SubmitEvent {
  ModelEvent event;
  friend bool operator==(const SubmitEvent&, const SubmitEvent&) = default;
};
struct Grab {
  ElementId object;
  friend bool operator==(const Grab&, const Grab&) = default;
};
// Streams movement from the object's current pose to `pose`.
struct MoveTo {
  ElementId object;
  Pose pose;
  std::int64_t duration_ms = 1000;
  double rate_hz = 20.0;
  friend bool operator==(const MoveTo&, const MoveTo&) = default;
};
struct Release {
  ElementId object;
  std::optional<Pose> pose;
  friend bool operator==(const Release&, const Release&) = default;
};
struct Speak {
  std::vector<std::uint8_t> data;
  friend bool operator==(const Speak&, const Speak&) = default;
};
struct Teleport {
  Pose controller;
  double max_range = 20.0;
  friend bool operator==(const Teleport&, const Teleport&) = default;
};
struct Leave {
  friend bool operator==(const Leave&, const Leave&) = default;
};
struct WaitMs {
  std::int64_t ms = 0;
  friend bool operator==(const WaitMs&, const WaitMs&) = default;
};

}  // namespace act

using ActionBody = std::variant<act::Join, act::SubmitEvent, act::Grab, act::MoveTo, act::Release,
                                act::Speak, act::Teleport, act::Leave, act::WaitMs>;

// Actions run in order. `at_ms`, when present, is the earliest absolute
// virtual time at which the action may start.
struct Action {
  std::optional<std::int64_t> at_ms;
  ActionBody body;
  friend bool operator==(const Action&, const Action&) = default;
};

struct BotScript {
  std::string name;
  double presence_hz = 0.0;  // 0 disables periodic presence
  std::vector<Action> actions;
  friend bool operator==(const BotScript&, const BotScript&) = default;
};

struct Scenario {
  std::vector<BotScript> bots;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct ScenarioInvalid {
  std::string reason;
};

Status<ScenarioInvalid> validate(const BotScript& bot);
Status<ScenarioInvalid> validate(const Scenario& scenario);

Result<BotScript, ScenarioInvalid> bot_script_from_json(const nlohmann::json& j);
Result<Scenario, ScenarioInvalid> scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BotScript& bot);
nlohmann::json to_json(const Scenario& scenario);

}  // namespace modelsync::sim
