#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "modelsync/ids.hpp"
#include "modelsync/model.hpp"
#include "modelsync/pose.hpp"

// JSON mapping of the model types, shared by control messages, snapshots and
// scenario files. Readers throw SchemaError on any shape mismatch.
namespace modelsync::json_io {

using nlohmann::json;

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strict accepts only canonical UUID text. Labels additionally maps any other
// non-empty string through Uuid::from_label (scenario files only).
enum class IdMode { Strict, Labels };

json to_json(const Vec3& v);
json to_json(const Quat& q);
json to_json(const Pose& p);
json to_json(const ClassNode& node);
json to_json(const Connector& conn);
json to_json(const ClassModel& model);
json to_json(const ModelEvent& event);

Vec3 vec3_from_json(const json& j);
Quat quat_from_json(const json& j);
Pose pose_from_json(const json& j);
ClassModel model_from_json(const json& j);
ModelEvent event_from_json(const json& j, IdMode mode = IdMode::Strict);

template <class Id>
Id id_from_json(const json& j, IdMode mode = IdMode::Strict) {
  if (!j.is_string()) throw SchemaError("id must be a string");
  const auto& text = j.get_ref<const std::string&>();
  if (auto id = Id::parse(text); id && !id->is_nil()) return *id;
  if (mode == IdMode::Labels && !text.empty()) return Id::from_label(text);
  throw SchemaError("invalid id '" + text + "'");
}

// Field access helpers that raise SchemaError instead of nlohmann exceptions.
const json& field(const json& obj, const char* key);
std::string string_field(const json& obj, const char* key);
std::uint64_t u64_field(const json& obj, const char* key);
float float_value(const json& j);
std::vector<std::string> lines_from_json(const json& j);

}  // namespace modelsync::json_io
