#include "modelsync/model.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace modelsync {

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "Association", "DirectedAssociation", "Inheritance", "Realization",
    "Aggregation", "Composition",         "Dependency",
};

constexpr std::array<std::string_view, 6> kErrorNames = {
    "UnknownElement", "DuplicateId", "InvalidText", "DanglingEndpoint", "InvalidPose", "InvalidId",
};

bool is_control(char32_t cp) { return cp < 0x20 || (cp >= 0x7F && cp <= 0x9F); }

// Decodes one scalar value; returns 0 bytes consumed on malformed input.
std::size_t decode_utf8(std::string_view s, std::size_t i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  char32_t min = 0;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
    min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
    min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
    min = 0x10000;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

bool lines_valid(const std::vector<std::string>& lines) {
  return std::all_of(lines.begin(), lines.end(), [](const std::string& l) { return is_valid_line(l); });
}

ModelError error(ModelErrorCode code, const ElementId& id, std::string detail) {
  return ModelError{code, id, std::move(detail)};
}

Failure<ModelError> failure(ModelErrorCode code, const ElementId& id, std::string detail) {
  return fail(error(code, id, std::move(detail)));
}

ClassNode* find_class(ClassModel& model, const ElementId& id) {
  auto it = model.classes.find(id);
  return it == model.classes.end() ? nullptr : &it->second;
}

struct Applier {
  ClassModel& model;

  Status<ModelError> operator()(const events::CreateClass& e) const {
    if (e.id.is_nil()) return failure(ModelErrorCode::InvalidId, e.id, "nil id");
    if (model.contains(e.id)) return failure(ModelErrorCode::DuplicateId, e.id, "id already in use");
    if (!is_valid_name(e.name)) return failure(ModelErrorCode::InvalidText, e.id, "invalid class name");
    if (!is_valid(e.pose)) return failure(ModelErrorCode::InvalidPose, e.id, "invalid pose");
    ClassNode node;
    node.id = e.id;
    node.name = e.name;
    node.pose = e.pose;
    model.classes.emplace(e.id, std::move(node));
    return Unit{};
  }

  Status<ModelError> operator()(const events::DeleteClass& e) const {
    auto it = model.classes.find(e.id);
    if (it == model.classes.end()) return failure(ModelErrorCode::UnknownElement, e.id, "no such class");
    model.classes.erase(it);
    std::erase_if(model.connectors, [&](const auto& entry) {
      return entry.second.source == e.id || entry.second.target == e.id;
    });
    return Unit{};
  }

  Status<ModelError> operator()(const events::RenameClass& e) const {
    ClassNode* node = find_class(model, e.id);
    if (node == nullptr) return failure(ModelErrorCode::UnknownElement, e.id, "no such class");
    if (!is_valid_name(e.name)) return failure(ModelErrorCode::InvalidText, e.id, "invalid class name");
    node->name = e.name;
    return Unit{};
  }

  Status<ModelError> operator()(const events::SetAttributes& e) const {
    ClassNode* node = find_class(model, e.id);
    if (node == nullptr) return failure(ModelErrorCode::UnknownElement, e.id, "no such class");
    if (!lines_valid(e.lines)) return failure(ModelErrorCode::InvalidText, e.id, "invalid attribute line");
    node->attributes = e.lines;
    return Unit{};
  }

  Status<ModelError> operator()(const events::SetMethods& e) const {
    ClassNode* node = find_class(model, e.id);
    if (node == nullptr) return failure(ModelErrorCode::UnknownElement, e.id, "no such class");
    if (!lines_valid(e.lines)) return failure(ModelErrorCode::InvalidText, e.id, "invalid method line");
    node->methods = e.lines;
    return Unit{};
  }

  Status<ModelError> operator()(const events::CreateConnector& e) const {
    if (e.id.is_nil()) return failure(ModelErrorCode::InvalidId, e.id, "nil id");
    if (model.contains(e.id)) return failure(ModelErrorCode::DuplicateId, e.id, "id already in use");
    if (!model.classes.contains(e.source)) {
      return failure(ModelErrorCode::DanglingEndpoint, e.id, "source " + e.source.to_string());
    }
    if (!model.classes.contains(e.target)) {
      return failure(ModelErrorCode::DanglingEndpoint, e.id, "target " + e.target.to_string());
    }
    model.connectors.emplace(e.id, Connector{e.id, e.kind, e.source, e.target});
    return Unit{};
  }

  Status<ModelError> operator()(const events::DeleteConnector& e) const {
    if (model.connectors.erase(e.id) == 0) {
      return failure(ModelErrorCode::UnknownElement, e.id, "no such connector");
    }
    return Unit{};
  }

  Status<ModelError> operator()(const events::CommitPose& e) const {
    ClassNode* node = find_class(model, e.id);
    if (node == nullptr) return failure(ModelErrorCode::UnknownElement, e.id, "no such class");
    if (!is_valid(e.pose)) return failure(ModelErrorCode::InvalidPose, e.id, "invalid pose");
    node->pose = e.pose;
    return Unit{};
  }
};

}  // namespace

std::string_view to_string(ConnectorKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<ConnectorKind> parse_connector_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<ConnectorKind>(i);
  }
  return std::nullopt;
}

ArrowheadStyle arrowhead(ConnectorKind kind) {
  switch (kind) {
    case ConnectorKind::Association:
      return ArrowheadStyle::None;
    case ConnectorKind::DirectedAssociation:
      return ArrowheadStyle::OpenArrow;
    case ConnectorKind::Inheritance:
      return ArrowheadStyle::HollowTriangle;
    case ConnectorKind::Realization:
      return ArrowheadStyle::HollowTriangleDashed;
    case ConnectorKind::Aggregation:
      return ArrowheadStyle::HollowDiamond;
    case ConnectorKind::Composition:
      return ArrowheadStyle::FilledDiamond;
    case ConnectorKind::Dependency:
      return ArrowheadStyle::OpenArrowDashed;
  }
  return ArrowheadStyle::None;
}

std::string_view to_string(ArrowheadStyle style) {
  switch (style) {
    case ArrowheadStyle::None:
      return "none";
    case ArrowheadStyle::OpenArrow:
      return "open-arrow";
    case ArrowheadStyle::HollowTriangle:
      return "hollow-triangle";
    case ArrowheadStyle::HollowTriangleDashed:
      return "hollow-triangle-dashed";
    case ArrowheadStyle::HollowDiamond:
      return "hollow-diamond";
    case ArrowheadStyle::FilledDiamond:
      return "filled-diamond";
    case ArrowheadStyle::OpenArrowDashed:
      return "open-arrow-dashed";
  }
  return "none";
}

const ElementId& subject_of(const ModelEvent& event) {
  return std::visit([](const auto& e) -> const ElementId& { return e.id; }, event);
}

std::string_view event_name(const ModelEvent& event) {
  constexpr std::array<std::string_view, 8> names = {
      "CreateClass",     "DeleteClass",     "RenameClass", "SetAttributes",
      "SetMethods",      "CreateConnector", "DeleteConnector", "CommitPose",
  };
  return names[event.index()];
}

std::string_view to_string(ModelErrorCode code) { return kErrorNames[static_cast<std::size_t>(code)]; }

std::optional<ModelErrorCode> parse_model_error_code(std::string_view text) {
  for (std::size_t i = 0; i < kErrorNames.size(); ++i) {
    if (kErrorNames[i] == text) return static_cast<ModelErrorCode>(i);
  }
  return std::nullopt;
}

std::optional<std::size_t> checked_text_length(std::string_view utf8) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < utf8.size();) {
    char32_t cp = 0;
    const std::size_t len = decode_utf8(utf8, i, cp);
    if (len == 0 || is_control(cp)) return std::nullopt;
    i += len;
    ++count;
  }
  return count;
}

bool is_valid_name(std::string_view name) {
  const auto len = checked_text_length(name);
  return len && *len >= 1 && *len <= kMaxNameLength;
}

bool is_valid_line(std::string_view line) {
  const auto len = checked_text_length(line);
  return len && *len <= kMaxLineLength;
}

Status<ModelError> apply_event_in_place(ClassModel& model, const ModelEvent& event) {
  // Every branch validates before its first mutation.
  return std::visit(Applier{model}, event);
}

Result<ClassModel, ModelError> apply_event(const ClassModel& model, const ModelEvent& event) {
  ClassModel next = model;
  auto status = apply_event_in_place(next, event);
  if (!status) return fail(status.error());
  return next;
}

std::string_view to_string(ViolationRule rule) {
  switch (rule) {
    case ViolationRule::NilId:
      return "NilId";
    case ViolationRule::KeyMismatch:
      return "KeyMismatch";
    case ViolationRule::DuplicateId:
      return "DuplicateId";
    case ViolationRule::InvalidText:
      return "InvalidText";
    case ViolationRule::InvalidPose:
      return "InvalidPose";
    case ViolationRule::InvalidExtent:
      return "InvalidExtent";
    case ViolationRule::DanglingEndpoint:
      return "DanglingEndpoint";
  }
  return "Unknown";
}

std::vector<Violation> validate(const ClassModel& model) {
  std::vector<Violation> out;
  auto report = [&out](const ElementId& id, ViolationRule rule, std::string detail) {
    out.push_back(Violation{id, rule, std::move(detail)});
  };

  for (const auto& [key, node] : model.classes) {
    if (key.is_nil()) report(key, ViolationRule::NilId, "class");
    if (node.id != key) report(key, ViolationRule::KeyMismatch, "class stored under foreign key");
    if (!is_valid_name(node.name)) report(key, ViolationRule::InvalidText, "name");
    if (!lines_valid(node.attributes)) report(key, ViolationRule::InvalidText, "attributes");
    if (!lines_valid(node.methods)) report(key, ViolationRule::InvalidText, "methods");
    if (!is_valid(node.pose)) report(key, ViolationRule::InvalidPose, "pose");
    const Vec3& e = node.extent;
    if (!is_finite(e) || e.x <= 0.0F || e.y <= 0.0F || e.z <= 0.0F) {
      report(key, ViolationRule::InvalidExtent, "extent");
    }
  }
  for (const auto& [key, conn] : model.connectors) {
    if (key.is_nil()) report(key, ViolationRule::NilId, "connector");
    if (conn.id != key) report(key, ViolationRule::KeyMismatch, "connector stored under foreign key");
    if (model.classes.contains(key)) report(key, ViolationRule::DuplicateId, "id used by class and connector");
    if (!model.classes.contains(conn.source)) report(key, ViolationRule::DanglingEndpoint, "source");
    if (!model.classes.contains(conn.target)) report(key, ViolationRule::DanglingEndpoint, "target");
  }
  return out;
}

Result<FoldResult, GapInSequence> fold_events(ClassModel initial,
                                              std::span<const SequencedEvent> events) {
  FoldResult result{std::move(initial), {}};
  if (events.empty()) return result;
  std::uint64_t expected = std::max<std::uint64_t>(events.front().seq, 1);
  for (const auto& ev : events) {
    if (ev.seq != expected) return fail(GapInSequence{expected, ev.seq});
    ++expected;
  }
  for (const auto& ev : events) {
    auto status = apply_event_in_place(result.model, ev.event);
    if (!status) result.diagnostics.push_back(FoldDiagnostic{ev.seq, status.error()});
  }
  return result;
}

}  // namespace modelsync
