#include "modelsync/model_json.hpp"

#include <cmath>

namespace modelsync::json_io {

const json& field(const json& obj, const char* key) {
  if (!obj.is_object()) throw SchemaError("expected object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_string()) throw SchemaError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t u64_field(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  throw SchemaError(std::string("field '") + key + "' must be a non-negative integer");
}

float float_value(const json& j) {
  if (!j.is_number()) throw SchemaError("expected number");
  const auto f = static_cast<float>(j.get<double>());
  if (!std::isfinite(f)) throw SchemaError("non-finite number");
  return f;
}

std::vector<std::string> lines_from_json(const json& j) {
  if (!j.is_array()) throw SchemaError("lines must be an array");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& line : j) {
    if (!line.is_string()) throw SchemaError("line must be a string");
    out.push_back(line.get<std::string>());
  }
  return out;
}

json to_json(const Vec3& v) { return json{{"x", v.x}, {"y", v.y}, {"z", v.z}}; }

json to_json(const Quat& q) { return json{{"x", q.x}, {"y", q.y}, {"z", q.z}, {"w", q.w}}; }

json to_json(const Pose& p) {
  return json{{"position", to_json(p.position)}, {"orientation", to_json(p.orientation)}};
}

json to_json(const ClassNode& node) {
  return json{{"id", node.id.to_string()},         {"name", node.name},
              {"attributes", node.attributes},     {"methods", node.methods},
              {"pose", to_json(node.pose)},        {"extent", to_json(node.extent)}};
}

json to_json(const Connector& conn) {
  return json{{"id", conn.id.to_string()},
              {"kind", std::string(to_string(conn.kind))},
              {"source", conn.source.to_string()},
              {"target", conn.target.to_string()}};
}

json to_json(const ClassModel& model) {
  json classes = json::array();
  for (const auto& [id, node] : model.classes) classes.push_back(to_json(node));
  json connectors = json::array();
  for (const auto& [id, conn] : model.connectors) connectors.push_back(to_json(conn));
  return json{{"classes", std::move(classes)}, {"connectors", std::move(connectors)}};
}

Vec3 vec3_from_json(const json& j) {
  return {float_value(field(j, "x")), float_value(field(j, "y")), float_value(field(j, "z"))};
}

Quat quat_from_json(const json& j) {
  return {float_value(field(j, "x")), float_value(field(j, "y")), float_value(field(j, "z")),
          float_value(field(j, "w"))};
}

Pose pose_from_json(const json& j) {
  return {vec3_from_json(field(j, "position")), quat_from_json(field(j, "orientation"))};
}

ClassModel model_from_json(const json& j) {
  ClassModel model;
  const json& classes = field(j, "classes");
  const json& connectors = field(j, "connectors");
  if (!classes.is_array() || !connectors.is_array()) throw SchemaError("model collections must be arrays");
  for (const auto& c : classes) {
    ClassNode node;
    node.id = id_from_json<ElementId>(field(c, "id"));
    node.name = string_field(c, "name");
    node.attributes = lines_from_json(field(c, "attributes"));
    node.methods = lines_from_json(field(c, "methods"));
    node.pose = pose_from_json(field(c, "pose"));
    node.extent = vec3_from_json(field(c, "extent"));
    if (!model.classes.emplace(node.id, node).second) throw SchemaError("duplicate class id");
  }
  for (const auto& c : connectors) {
    Connector conn;
    conn.id = id_from_json<ElementId>(field(c, "id"));
    auto kind = parse_connector_kind(string_field(c, "kind"));
    if (!kind) throw SchemaError("unknown connector kind");
    conn.kind = *kind;
    conn.source = id_from_json<ElementId>(field(c, "source"));
    conn.target = id_from_json<ElementId>(field(c, "target"));
    if (!model.connectors.emplace(conn.id, conn).second) throw SchemaError("duplicate connector id");
  }
  return model;
}

namespace {

struct EventWriter {
  json operator()(const events::CreateClass& e) const {
    return {{"op", "CreateClass"}, {"id", e.id.to_string()}, {"name", e.name}, {"pose", to_json(e.pose)}};
  }
  json operator()(const events::DeleteClass& e) const {
    return {{"op", "DeleteClass"}, {"id", e.id.to_string()}};
  }
  json operator()(const events::RenameClass& e) const {
    return {{"op", "RenameClass"}, {"id", e.id.to_string()}, {"name", e.name}};
  }
  json operator()(const events::SetAttributes& e) const {
    return {{"op", "SetAttributes"}, {"id", e.id.to_string()}, {"lines", e.lines}};
  }
  json operator()(const events::SetMethods& e) const {
    return {{"op", "SetMethods"}, {"id", e.id.to_string()}, {"lines", e.lines}};
  }
  json operator()(const events::CreateConnector& e) const {
    return {{"op", "CreateConnector"},
            {"id", e.id.to_string()},
            {"kind", std::string(to_string(e.kind))},
            {"source", e.source.to_string()},
            {"target", e.target.to_string()}};
  }
  json operator()(const events::DeleteConnector& e) const {
    return {{"op", "DeleteConnector"}, {"id", e.id.to_string()}};
  }
  json operator()(const events::CommitPose& e) const {
    return {{"op", "CommitPose"}, {"id", e.id.to_string()}, {"pose", to_json(e.pose)}};
  }
};

}  // namespace

json to_json(const ModelEvent& event) { return std::visit(EventWriter{}, event); }

ModelEvent event_from_json(const json& j, IdMode mode) {
  const std::string op = string_field(j, "op");
  auto id = [&](const char* key) { return id_from_json<ElementId>(field(j, key), mode); };
  if (op == "CreateClass") {
    Pose pose = j.contains("pose") ? pose_from_json(j["pose"]) : Pose::identity();
    return events::CreateClass{id("id"), string_field(j, "name"), pose};
  }
  if (op == "DeleteClass") return events::DeleteClass{id("id")};
  if (op == "RenameClass") return events::RenameClass{id("id"), string_field(j, "name")};
  if (op == "SetAttributes") return events::SetAttributes{id("id"), lines_from_json(field(j, "lines"))};
  if (op == "SetMethods") return events::SetMethods{id("id"), lines_from_json(field(j, "lines"))};
  if (op == "CreateConnector") {
    auto kind = parse_connector_kind(string_field(j, "kind"));
    if (!kind) throw SchemaError("unknown connector kind");
    return events::CreateConnector{id("id"), *kind, id("source"), id("target")};
  }
  if (op == "DeleteConnector") return events::DeleteConnector{id("id")};
  if (op == "CommitPose") return events::CommitPose{id("id"), pose_from_json(field(j, "pose"))};
  throw SchemaError("unknown event op '" + op + "'");
}

}  // namespace modelsync::json_io
