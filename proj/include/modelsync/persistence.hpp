#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "modelsync/ids.hpp"
#include "modelsync/model.hpp"
#include "modelsync/result.hpp"
#include "modelsync/server.hpp"
#include "modelsync/wire.hpp"

namespace modelsync::persistence {

inline constexpr std::uint32_t kSnapshotSchemaVersion = 1;

struct SnapshotDocument {
  std::uint32_t schema_version = kSnapshotSchemaVersion;
  SessionId session;
  ClassModel model;
  std::uint64_t last_seq = 0;

  friend bool operator==(const SnapshotDocument&, const SnapshotDocument&) = default;
};

struct FormatError {
  std::string reason;
};

// Canonical JSON bytes.
std::string save_snapshot(const SnapshotDocument& doc);
// Accepts any JSON layout but only schema_version 1 and only valid models.
Result<SnapshotDocument, FormatError> load_snapshot(std::string_view bytes);

SnapshotDocument snapshot_of(const server::Session& session);
SnapshotDocument snapshot_of(const wire::msg::Welcome& welcome);

// Class blocks in name order, then one relation line per connector ordered by
// (source name, target name, kind).
std::string export_plantuml(const ClassModel& model);
std::string export_json(const ClassModel& model);

struct IoError {
  std::string reason;
};

Result<std::string, IoError> read_file(const std::filesystem::path& path);
Status<IoError> write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace modelsync::persistence
