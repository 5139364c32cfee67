#pragma once

#include <string>

#include <json.hpp>

#include "modelsync/model.hpp"

namespace modelsync {

// Canonical text: keys in byte order, no insignificant whitespace, every
// floating-point number printed as the shortest decimal that round-trips its
// 32-bit value (negative zero prints as 0). Equal models yield equal bytes.
std::string canonical_dump(const nlohmann::json& value);

std::string canonical_model_bytes(const ClassModel& model);

// Shortest round-trip text of a 32-bit float.
std::string shortest_float(float value);

}  // namespace modelsync
