#include "modelsync/persistence.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "modelsync/canonical_json.hpp"
#include "modelsync/model_json.hpp"

namespace modelsync::persistence {

namespace {

using json_io::json;

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  if (!alpha(name.front())) return false;
  return std::all_of(name.begin(), name.end(), [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

std::string alias_of(const ElementId& id) {
  std::string hex = id.to_string();
  hex.erase(std::remove(hex.begin(), hex.end(), '-'), hex.end());
  return "C_" + hex;
}

std::string quoted_name(std::string_view text) {
  std::string out = "\"";
  for (char c : text) out += c == '"' ? '\'' : c;
  return out + "\"";
}

struct RelationToken {
  std::string_view token;
  bool head_at_left;  // decoration drawn next to the target, written first
};

RelationToken relation_token(ConnectorKind kind) {
  switch (kind) {
    case ConnectorKind::Inheritance:
      return {"<|--", true};
    case ConnectorKind::Realization:
      return {"<|..", true};
    case ConnectorKind::Aggregation:
      return {"o--", true};
    case ConnectorKind::Composition:
      return {"*--", true};
    case ConnectorKind::Dependency:
      return {"..>", false};
    case ConnectorKind::Association:
      return {"--", false};
    case ConnectorKind::DirectedAssociation:
      return {"-->", false};
  }
  return {"--", false};
}

}  // namespace

std::string save_snapshot(const SnapshotDocument& doc) {
  const json j{{"schema_version", doc.schema_version},
               {"session", doc.session.to_string()},
               {"model", json_io::to_json(doc.model)},
               {"last_seq", doc.last_seq}};
  return canonical_dump(j);
}

Result<SnapshotDocument, FormatError> load_snapshot(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    return fail(FormatError{std::string("malformed JSON: ") + e.what()});
  }
  try {
    if (!j.is_object()) throw json_io::SchemaError("snapshot must be a JSON object");
    const json& version = json_io::field(j, "schema_version");
    if (!version.is_number_unsigned() || version.get<std::uint64_t>() != kSnapshotSchemaVersion) {
      return fail(FormatError{"unsupported schema_version " + version.dump()});
    }
    SnapshotDocument doc;
    doc.session = json_io::id_from_json<SessionId>(json_io::field(j, "session"));
    doc.model = json_io::model_from_json(json_io::field(j, "model"));
    doc.last_seq = json_io::u64_field(j, "last_seq");
    if (const auto violations = validate(doc.model); !violations.empty()) {
      return fail(FormatError{"invalid model: " + violations.front().detail});
    }
    return doc;
  } catch (const json_io::SchemaError& e) {
    return fail(FormatError{e.what()});
  } catch (const json::exception& e) {
    return fail(FormatError{e.what()});
  }
}

SnapshotDocument snapshot_of(const server::Session& session) {
  const auto& state = session.state();
  return SnapshotDocument{kSnapshotSchemaVersion, state.session, state.model, session.last_seq()};
}

SnapshotDocument snapshot_of(const wire::msg::Welcome& welcome) {
  return SnapshotDocument{kSnapshotSchemaVersion, welcome.session, welcome.snapshot, welcome.last_seq};
}

std::string export_plantuml(const ClassModel& model) {
  std::map<std::string, int> name_count;
  for (const auto& [id, c] : model.classes) ++name_count[c.name];
  std::map<ElementId, std::string> ref;
  for (const auto& [id, c] : model.classes) {
    ref[id] = is_identifier(c.name) && name_count[c.name] == 1 ? c.name : alias_of(id);
  }

  std::vector<const ClassNode*> classes;
  for (const auto& [id, c] : model.classes) classes.push_back(&c);
  std::stable_sort(classes.begin(), classes.end(),
                   [](const ClassNode* a, const ClassNode* b) { return std::tie(a->name, a->id) < std::tie(b->name, b->id); });

  std::ostringstream out;
  out << "@startuml\n";
  for (const ClassNode* c : classes) {
    const std::string& r = ref[c->id];
    if (r == c->name) {
      out << "class " << r << " {\n";
    } else {
      out << "class " << quoted_name(c->name) << " as " << r << " {\n";
    }
    for (const auto& line : c->attributes) out << "  " << line << '\n';
    for (const auto& line : c->methods) out << "  " << line << '\n';
    out << "}\n";
  }

  std::vector<const Connector*> connectors;
  for (const auto& [id, c] : model.connectors) connectors.push_back(&c);
  auto name_of = [&](const ElementId& id) -> const std::string& { return model.classes.at(id).name; };
  std::stable_sort(connectors.begin(), connectors.end(), [&](const Connector* a, const Connector* b) {
    return std::forward_as_tuple(name_of(a->source), name_of(a->target), a->kind, a->id) <
           std::forward_as_tuple(name_of(b->source), name_of(b->target), b->kind, b->id);
  });
  for (const Connector* c : connectors) {
    const auto [token, head_at_left] = relation_token(c->kind);
    const std::string& source = ref[c->source];
    const std::string& target = ref[c->target];
    if (head_at_left) {
      out << target << ' ' << token << ' ' << source << '\n';
    } else {
      out << source << ' ' << token << ' ' << target << '\n';
    }
  }
  out << "@enduml\n";
  return out.str();
}

std::string export_json(const ClassModel& model) { return canonical_model_bytes(model); }

Result<std::string, IoError> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail(IoError{"cannot open " + path.string()});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) return fail(IoError{"cannot read " + path.string()});
  return buffer.str();
}

Status<IoError> write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return fail(IoError{"cannot open " + path.string()});
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) return fail(IoError{"cannot write " + path.string()});
  return Unit{};
}

}  // namespace modelsync::persistence
