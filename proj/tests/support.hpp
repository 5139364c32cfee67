#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "modelsync/model.hpp"
#include "modelsync/pose.hpp"
#include "modelsync/wire.hpp"

namespace testing {

using namespace modelsync;

inline ElementId id(const char* label) { return ElementId::from_label(label); }
inline UserId user(const char* label) { return UserId::from_label(label); }

inline float real(std::mt19937_64& rng, double lo, double hi) {
  return float(std::uniform_real_distribution<double>(lo, hi)(rng));
}

inline Quat random_unit_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  double x = n(rng), y = n(rng), z = n(rng), w = n(rng);
  const double len = std::sqrt(x * x + y * y + z * z + w * w);
  return {float(x / len), float(y / len), float(z / len), float(w / len)};
}

inline Pose random_pose(std::mt19937_64& rng, double extent = 10.0) {
  return {{real(rng, -extent, extent), real(rng, -extent, extent), real(rng, -extent, extent)},
          random_unit_quat(rng)};
}

inline std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
  static const std::vector<std::string> pieces = {"a", "B", "z", "_", " ", "9", "é", "ß", "中", "–", ":", "("};
  std::string out;
  const auto n = std::uniform_int_distribution<std::size_t>(1, max_len)(rng);
  for (std::size_t i = 0; i < n; ++i) out += pieces[rng() % pieces.size()];
  return out;
}

inline std::vector<std::string> random_lines(std::mt19937_64& rng) {
  std::vector<std::string> lines(rng() % 4);
  for (auto& l : lines) l = random_text(rng, 12);
  return lines;
}

// Valid model with `classes` classes and up to `connectors` connectors.
inline ClassModel random_model(std::mt19937_64& rng, std::size_t classes, std::size_t connectors) {
  ClassModel m;
  std::vector<ElementId> ids;
  for (std::size_t i = 0; i < classes; ++i) {
    ClassNode c;
    c.id = ElementId::random(rng);
    c.name = random_text(rng, 20);
    c.attributes = random_lines(rng);
    c.methods = random_lines(rng);
    c.pose = random_pose(rng);
    m.classes.emplace(c.id, c);
    ids.push_back(c.id);
  }
  for (std::size_t i = 0; i < connectors && !ids.empty(); ++i) {
    Connector c;
    c.id = ElementId::random(rng);
    c.kind = kAllConnectorKinds[rng() % std::size(kAllConnectorKinds)];
    c.source = ids[rng() % ids.size()];
    c.target = ids[rng() % ids.size()];
    m.connectors.emplace(c.id, c);
  }
  return m;
}

// Arbitrary event over a small id pool; many will not apply.
inline ModelEvent random_event(std::mt19937_64& rng, const std::vector<ElementId>& pool) {
  const auto& a = pool[rng() % pool.size()];
  const auto& b = pool[rng() % pool.size()];
  const auto& c = pool[rng() % pool.size()];
  switch (rng() % 8) {
    case 0:
      return events::CreateClass{a, random_text(rng, 10), random_pose(rng)};
    case 1:
      return events::DeleteClass{a};
    case 2:
      return events::RenameClass{a, random_text(rng, 10)};
    case 3:
      return events::SetAttributes{a, random_lines(rng)};
    case 4:
      return events::SetMethods{a, random_lines(rng)};
    case 5:
      return events::CreateConnector{a, kAllConnectorKinds[rng() % std::size(kAllConnectorKinds)], b, c};
    case 6:
      return events::DeleteConnector{a};
    default:
      return events::CommitPose{a, random_pose(rng)};
  }
}

inline std::vector<ElementId> id_pool(std::mt19937_64& rng, std::size_t n) {
  std::vector<ElementId> pool;
  for (std::size_t i = 0; i < n; ++i) pool.push_back(ElementId::random(rng));
  return pool;
}

inline wire::ControlMessage random_control(std::mt19937_64& rng, const std::vector<ElementId>& pool) {
  const UserId u = UserId::random(rng);
  const ElementId& e = pool[rng() % pool.size()];
  auto tag = [&]() -> std::optional<std::uint64_t> {
    if (rng() % 2) return std::nullopt;
    return rng();
  };
  switch (rng() % 13) {
    case 0:
      return wire::msg::Join{random_text(rng, 20)};
    case 1: {
      wire::msg::Welcome w{SessionId::random(rng), u, random_model(rng, rng() % 4, rng() % 4), rng(), {}, {}};
      for (std::uint64_t i = rng() % 3; i > 0; --i) w.members.push_back({UserId::random(rng), random_text(rng, 8)});
      for (std::uint64_t i = rng() % 3; i > 0; --i) w.ownership.push_back({ElementId::random(rng), UserId::random(rng)});
      return w;
    }
    case 2:
      return wire::msg::EventSubmit{rng(), random_event(rng, pool)};
    case 3:
      return wire::msg::EventBroadcast{rng(), u, tag(), random_event(rng, pool)};
    case 4: {
      constexpr wire::NackReason reasons[] = {wire::NackReason::UnknownElement, wire::NackReason::NotOwner,
                                              wire::NackReason::SessionFull, wire::NackReason::InvalidText};
      std::optional<ElementId> object;
      if (rng() % 2) object = e;
      return wire::msg::Nack{tag(), reasons[rng() % 4], object};
    }
    case 5:
      return wire::msg::GrabRequest{e};
    case 6:
      return wire::msg::GrabGrant{e, u};
    case 7:
      return wire::msg::GrabDeny{e, u};
    case 8:
      return wire::msg::Release{e, random_pose(rng)};
    case 9:
      return wire::msg::PeerJoined{u, random_text(rng, 12)};
    case 10:
      return wire::msg::PeerLeft{u};
    case 11: {
      std::vector<std::uint8_t> data(rng() % 64);
      for (auto& b : data) b = std::uint8_t(rng());
      std::optional<UserId> sender;
      if (rng() % 2) sender = u;
      return wire::msg::VoiceFrame{sender, data};
    }
    default:
      return wire::msg::Leave{};
  }
}

inline wire::PresencePacket random_presence(std::mt19937_64& rng) {
  wire::PresencePacket p;
  p.user = UserId::random(rng);
  p.seq = std::uint32_t(rng());
  p.head = random_pose(rng);
  p.left_hand = random_pose(rng);
  p.right_hand = random_pose(rng);
  p.left_gesture = wire::GestureState(rng() % 4);
  p.right_gesture = wire::GestureState(rng() % 4);
  return p;
}

}  // namespace testing
