#include "modelsync/canonical_json.hpp"

#include <array>
#include <charconv>

#include "modelsync/model_json.hpp"

namespace modelsync {

namespace {

template <class T>
void append_integer(std::string& out, T value) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  out.append(buf.data(), end);
}

void write(const nlohmann::json& j, std::string& out) {
  using value_t = nlohmann::json::value_t;
  switch (j.type()) {
    case value_t::null:
    case value_t::discarded:
      out += "null";
      break;
    case value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case value_t::number_integer:
      append_integer(out, j.get<std::int64_t>());
      break;
    case value_t::number_unsigned:
      append_integer(out, j.get<std::uint64_t>());
      break;
    case value_t::number_float:
      out += shortest_float(static_cast<float>(j.get<double>()));
      break;
    case value_t::string:
      out += j.dump();
      break;
    case value_t::array: {
      out.push_back('[');
      bool first = true;
      for (const auto& item : j) {
        if (!first) out.push_back(',');
        first = false;
        write(item, out);
      }
      out.push_back(']');
      break;
    }
    case value_t::object: {
      // object_t is a std::map, so iteration is already in key byte order.
      out.push_back('{');
      bool first = true;
      for (const auto& [key, item] : j.items()) {
        if (!first) out.push_back(',');
        first = false;
        out += nlohmann::json(key).dump();
        out.push_back(':');
        write(item, out);
      }
      out.push_back('}');
      break;
    }
    case value_t::binary:
      out += "null";
      break;
  }
}

}  // namespace

std::string shortest_float(float value) {
  if (value == 0.0F) return "0";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

std::string canonical_dump(const nlohmann::json& value) {
  std::string out;
  write(value, out);
  return out;
}

std::string canonical_model_bytes(const ClassModel& model) {
  return canonical_dump(json_io::to_json(model));
}

}  // namespace modelsync
