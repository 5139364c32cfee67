#include "modelsync/scenario.hpp"

#include <cmath>

#include "modelsync/model_json.hpp"
#include "modelsync/wire.hpp"

namespace modelsync::sim {

namespace {

using json_io::field;
using json_io::IdMode;
using json_io::json;
using json_io::SchemaError;

std::int64_t int_field(const json& j, const char* key, std::int64_t fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer()) throw SchemaError(std::string("'") + key + "' must be an integer");
  return it->get<std::int64_t>();
}

double number_field(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw SchemaError(std::string("'") + key + "' must be a number");
  return it->get<double>();
}

ElementId element(const json& j, const char* key) {
  return json_io::id_from_json<ElementId>(field(j, key), IdMode::Labels);
}

ActionBody body_from_json(const json& j) {
  const std::string kind = json_io::string_field(j, "action");
  if (kind == "Join") return act::Join{};
  if (kind == "SubmitEvent") return act::SubmitEvent{json_io::event_from_json(field(j, "event"), IdMode::Labels)};
  if (kind == "Grab") return act::Grab{element(j, "object")};
  if (kind == "MoveTo") {
    return act::MoveTo{element(j, "object"), json_io::pose_from_json(field(j, "pose")),
                       int_field(j, "duration_ms", 1000), number_field(j, "rate_hz", 20.0)};
  }
  if (kind == "Release") {
    act::Release r{element(j, "object"), std::nullopt};
    if (j.contains("pose")) r.pose = json_io::pose_from_json(j["pose"]);
    return r;
  }
  if (kind == "Speak") {
    if (j.contains("size")) {
      const auto size = int_field(j, "size", 0);
      if (size < 0) throw SchemaError("'size' must be non-negative");
      std::vector<std::uint8_t> data(static_cast<std::size_t>(size));
      for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::uint8_t>(i * 31 + 7);
      return act::Speak{std::move(data)};
    }
    auto data = wire::base64_decode(json_io::string_field(j, "data"));
    if (!data) throw SchemaError("'data' must be base64");
    return act::Speak{std::move(*data)};
  }
  if (kind == "Teleport") {
    return act::Teleport{json_io::pose_from_json(field(j, "controller")), number_field(j, "max_range", 20.0)};
  }
  if (kind == "Leave") return act::Leave{};
  if (kind == "WaitMs") return act::WaitMs{int_field(j, "ms", 0)};
  throw SchemaError("unknown action '" + kind + "'");
}

struct BodyWriter {
  json operator()(const act::Join&) const { return {{"action", "Join"}}; }
  json operator()(const act::SubmitEvent& a) const {
    return {{"action", "SubmitEvent"}, {"event", json_io::to_json(a.event)}};
  }
  json operator()(const act::Grab& a) const { return {{"action", "Grab"}, {"object", a.object.to_string()}}; }
  json operator()(const act::MoveTo& a) const {
    return {{"action", "MoveTo"},
            {"object", a.object.to_string()},
            {"pose", json_io::to_json(a.pose)},
            {"duration_ms", a.duration_ms},
            {"rate_hz", a.rate_hz}};
  }
  json operator()(const act::Release& a) const {
    json j{{"action", "Release"}, {"object", a.object.to_string()}};
    if (a.pose) j["pose"] = json_io::to_json(*a.pose);
    return j;
  }
  json operator()(const act::Speak& a) const { return {{"action", "Speak"}, {"data", wire::base64_encode(a.data)}}; }
  json operator()(const act::Teleport& a) const {
    return {{"action", "Teleport"}, {"controller", json_io::to_json(a.controller)}, {"max_range", a.max_range}};
  }
  json operator()(const act::Leave&) const { return {{"action", "Leave"}}; }
  json operator()(const act::WaitMs& a) const { return {{"action", "WaitMs"}, {"ms", a.ms}}; }
};

Failure<ScenarioInvalid> invalid(const std::string& bot, const std::string& reason) {
  return fail(ScenarioInvalid{"bot '" + bot + "': " + reason});
}

}  // namespace

Status<ScenarioInvalid> validate(const BotScript& bot) {
  if (!is_valid_name(bot.name)) return invalid(bot.name, "invalid name");
  if (!std::isfinite(bot.presence_hz) || bot.presence_hz < 0.0) return invalid(bot.name, "presence_hz must be >= 0");
  bool joined = false;
  bool left = false;
  std::optional<std::int64_t> last_at;
  for (std::size_t i = 0; i < bot.actions.size(); ++i) {
    const Action& a = bot.actions[i];
    const std::string where = "action " + std::to_string(i);
    if (a.at_ms) {
      if (*a.at_ms < 0) return invalid(bot.name, where + ": negative at_ms");
      if (last_at && *a.at_ms < *last_at) return invalid(bot.name, where + ": timestamps must be non-decreasing");
      last_at = a.at_ms;
    }
    if (left) return invalid(bot.name, where + ": action after Leave");
    const bool is_wait = std::holds_alternative<act::WaitMs>(a.body);
    const bool is_join = std::holds_alternative<act::Join>(a.body);
    if (is_join) {
      if (joined) return invalid(bot.name, where + ": duplicate Join");
      joined = true;
    } else if (!joined && !is_wait) {
      return invalid(bot.name, where + ": action before Join");
    }
    if (std::holds_alternative<act::Leave>(a.body)) left = true;
    if (const auto* w = std::get_if<act::WaitMs>(&a.body); w && w->ms < 0) {
      return invalid(bot.name, where + ": negative wait");
    }
    if (const auto* m = std::get_if<act::MoveTo>(&a.body)) {
      if (m->duration_ms < 0 || !std::isfinite(m->rate_hz) || m->rate_hz <= 0.0 || !is_valid(m->pose)) {
        return invalid(bot.name, where + ": bad MoveTo");
      }
    }
    if (const auto* r = std::get_if<act::Release>(&a.body); r && r->pose && !is_valid(*r->pose)) {
      return invalid(bot.name, where + ": bad Release pose");
    }
    if (const auto* t = std::get_if<act::Teleport>(&a.body)) {
      if (!is_valid(t->controller) || !(t->max_range > 0.0)) return invalid(bot.name, where + ": bad Teleport");
    }
  }
  return Unit{};
}

Status<ScenarioInvalid> validate(const Scenario& scenario) {
  if (scenario.bots.empty()) return fail(ScenarioInvalid{"scenario has no bots"});
  for (const auto& bot : scenario.bots) {
    auto status = validate(bot);
    if (!status) return status;
  }
  return Unit{};
}

Result<BotScript, ScenarioInvalid> bot_script_from_json(const json& j) {
  try {
    BotScript bot;
    if (j.contains("name")) bot.name = json_io::string_field(j, "name");
    bot.presence_hz = number_field(j, "presence_hz", 0.0);
    const json& actions = field(j, "actions");
    if (!actions.is_array()) throw SchemaError("'actions' must be an array");
    for (const auto& a : actions) {
      Action action;
      if (a.contains("at_ms")) action.at_ms = int_field(a, "at_ms", 0);
      action.body = body_from_json(a);
      bot.actions.push_back(std::move(action));
    }
    return bot;
  } catch (const SchemaError& e) {
    return fail(ScenarioInvalid{e.what()});
  } catch (const json::exception& e) {
    return fail(ScenarioInvalid{e.what()});
  }
}

Result<Scenario, ScenarioInvalid> scenario_from_json(const json& j) {
  if (!j.is_object() || !j.contains("bots") || !j["bots"].is_array()) {
    return fail(ScenarioInvalid{"scenario must be an object with a 'bots' array"});
  }
  Scenario scenario;
  for (const auto& b : j["bots"]) {
    auto bot = bot_script_from_json(b);
    if (!bot) return fail(bot.error());
    scenario.bots.push_back(std::move(bot).value());
  }
  auto status = validate(scenario);
  if (!status) return fail(status.error());
  return scenario;
}

json to_json(const BotScript& bot) {
  json actions = json::array();
  for (const auto& a : bot.actions) {
    json j = std::visit(BodyWriter{}, a.body);
    if (a.at_ms) j["at_ms"] = *a.at_ms;
    actions.push_back(std::move(j));
  }
  return {{"name", bot.name}, {"presence_hz", bot.presence_hz}, {"actions", std::move(actions)}};
}

json to_json(const Scenario& scenario) {
  json bots = json::array();
  for (const auto& bot : scenario.bots) bots.push_back(to_json(bot));
  return {{"bots", std::move(bots)}};
}

}  // namespace modelsync::sim
