#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "modelsync/ids.hpp"
#include "modelsync/pose.hpp"
#include "modelsync/result.hpp"

namespace modelsync {

inline constexpr Vec3 kDefaultClassExtent{1.0F, 1.0F, 0.4F};
inline constexpr std::size_t kMaxNameLength = 64;
inline constexpr std::size_t kMaxLineLength = 128;

enum class ConnectorKind : std::uint8_t {
  Association,
  DirectedAssociation,
  Inheritance,
  Realization,
  Aggregation,
  Composition,
  Dependency,
};

inline constexpr ConnectorKind kAllConnectorKinds[] = {
    ConnectorKind::Association, ConnectorKind::DirectedAssociation, ConnectorKind::Inheritance,
    ConnectorKind::Realization, ConnectorKind::Aggregation,         ConnectorKind::Composition,
    ConnectorKind::Dependency,
};

// Arrowhead drawn at the target end of a connector.
enum class ArrowheadStyle : std::uint8_t {
  None,
  OpenArrow,
  HollowTriangle,
  HollowTriangleDashed,
  HollowDiamond,
  FilledDiamond,
  OpenArrowDashed,
};

std::string_view to_string(ConnectorKind kind);
std::optional<ConnectorKind> parse_connector_kind(std::string_view text);
ArrowheadStyle arrowhead(ConnectorKind kind);
std::string_view to_string(ArrowheadStyle style);

// A class is rendered as a cuboid; every face shows this one text record.
struct ClassNode {
  ElementId id;
  std::string name;
  std::vector<std::string> attributes;
  std::vector<std::string> methods;
  Pose pose;
  Vec3 extent = kDefaultClassExtent;

  friend bool operator==(const ClassNode&, const ClassNode&) = default;
};

// Geometry is derived (straight tube between class centers), never stored.
struct Connector {
  ElementId id;
  ConnectorKind kind = ConnectorKind::Association;
  ElementId source;
  ElementId target;

  friend bool operator==(const Connector&, const Connector&) = default;
};

struct ClassModel {
  std::map<ElementId, ClassNode> classes;
  std::map<ElementId, Connector> connectors;

  bool contains(const ElementId& id) const {
    return classes.contains(id) || connectors.contains(id);
  }
  bool empty() const { return classes.empty() && connectors.empty(); }

  friend bool operator==(const ClassModel&, const ClassModel&) = default;
};

namespace events {

struct CreateClass {
  ElementId id;
  std::string name;
  Pose pose;
  friend bool operator==(const CreateClass&, const CreateClass&) = default;
};
struct DeleteClass {
  ElementId id;
  friend bool operator==(const DeleteClass&, const DeleteClass&) = default;
};
struct RenameClass {
  ElementId id;
  std::string name;
  friend bool operator==(const RenameClass&, const RenameClass&) = default;
};
struct SetAttributes {
  ElementId id;
  std::vector<std::string> lines;
  friend bool operator==(const SetAttributes&, const SetAttributes&) = default;
};
struct SetMethods {
  ElementId id;
  std::vector<std::string> lines;
  friend bool operator==(const SetMethods&, const SetMethods&) = default;
};
struct CreateConnector {
  ElementId id;
  ConnectorKind kind = ConnectorKind::Association;
  ElementId source;
  ElementId target;
  friend bool operator==(const CreateConnector&, const CreateConnector&) = default;
};
struct DeleteConnector {
  ElementId id;
  friend bool operator==(const DeleteConnector&, const DeleteConnector&) = default;
};
struct CommitPose {
  ElementId id;
  Pose pose;
  friend bool operator==(const CommitPose&, const CommitPose&) = default;
};

}  // namespace events

using ModelEvent =
    std::variant<events::CreateClass, events::DeleteClass, events::RenameClass,
                 events::SetAttributes, events::SetMethods, events::CreateConnector,
                 events::DeleteConnector, events::CommitPose>;

// Id of the element the event creates, mutates or deletes.
const ElementId& subject_of(const ModelEvent& event);
std::string_view event_name(const ModelEvent& event);

struct SequencedEvent {
  std::uint64_t seq = 0;
  UserId actor;
  ModelEvent event;

  friend bool operator==(const SequencedEvent&, const SequencedEvent&) = default;
};

enum class ModelErrorCode : std::uint8_t {
  UnknownElement,
  DuplicateId,
  InvalidText,
  DanglingEndpoint,
  InvalidPose,
  InvalidId,
};

std::string_view to_string(ModelErrorCode code);
std::optional<ModelErrorCode> parse_model_error_code(std::string_view text);

struct ModelError {
  ModelErrorCode code;
  ElementId id;
  std::string detail;
};

// Number of Unicode scalar values in well-formed UTF-8 text without control
// characters (C0, DEL, C1); nullopt otherwise.
std::optional<std::size_t> checked_text_length(std::string_view utf8);
bool is_valid_name(std::string_view name);
bool is_valid_line(std::string_view line);

// Pure: the input model is never modified.
Result<ClassModel, ModelError> apply_event(const ClassModel& model, const ModelEvent& event);
// Strong exception-and-error guarantee: on failure `model` is untouched.
Status<ModelError> apply_event_in_place(ClassModel& model, const ModelEvent& event);

enum class ViolationRule : std::uint8_t {
  NilId,
  KeyMismatch,
  DuplicateId,
  InvalidText,
  InvalidPose,
  InvalidExtent,
  DanglingEndpoint,
};

std::string_view to_string(ViolationRule rule);

struct Violation {
  ElementId id;
  ViolationRule rule;
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Total; an empty result means every model invariant holds.
std::vector<Violation> validate(const ClassModel& model);

struct FoldDiagnostic {
  std::uint64_t seq = 0;
  ModelError error;
};

struct FoldResult {
  ClassModel model;
  std::vector<FoldDiagnostic> diagnostics;
};

struct GapInSequence {
  std::uint64_t expected = 0;
  std::uint64_t found = 0;
};

// Left fold of apply_event in server order. Events that fail to apply are
// skipped and reported as diagnostics; a non-gapless sequence is rejected.
Result<FoldResult, GapInSequence> fold_events(ClassModel initial,
                                              std::span<const SequencedEvent> events);

}  // namespace modelsync
