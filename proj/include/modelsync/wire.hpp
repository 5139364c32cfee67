#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "modelsync/ids.hpp"
#include "modelsync/model.hpp"
#include "modelsync/pose.hpp"
#include "modelsync/result.hpp"

// Frame formats for both synchronization channels. Every encoded message is
// one transport frame. Binary layouts are little-endian and bit-exact:
//
//   movement (50 B):  0x4D 0x01 | subject[16] | seq u32 | pos 3xf32 | quat 4xf32
//   presence (108 B): 0x4D 0x02 | user[16] | seq u32 | head, left, right (7xf32 each)
//                     | left gesture u8 | right gesture u8
//   control:          0x45 | UTF-8 JSON object with a "type" discriminator
namespace modelsync::wire {

using Frame = std::vector<std::uint8_t>;

inline constexpr std::uint8_t kBinaryMagic = 0x4D;
inline constexpr std::uint8_t kMovementKind = 0x01;
inline constexpr std::uint8_t kPresenceKind = 0x02;
inline constexpr std::uint8_t kControlMagic = 0x45;
inline constexpr std::size_t kMovementFrameSize = 50;
inline constexpr std::size_t kPresenceFrameSize = 108;

enum class GestureState : std::uint8_t { Relaxed = 0, Point = 1, Grab = 2, ThumbsUp = 3 };

struct MovementPacket {
  ElementId subject;
  std::uint32_t seq = 0;
  Pose pose;

  friend bool operator==(const MovementPacket&, const MovementPacket&) = default;
};

struct PresencePacket {
  UserId user;
  std::uint32_t seq = 0;
  Pose head;
  Pose left_hand;
  Pose right_hand;
  GestureState left_gesture = GestureState::Relaxed;
  GestureState right_gesture = GestureState::Relaxed;

  friend bool operator==(const PresencePacket&, const PresencePacket&) = default;
};

enum class NackReason : std::uint8_t {
  UnknownElement,
  DuplicateId,
  InvalidText,
  DanglingEndpoint,
  InvalidPose,
  InvalidId,
  NotOwner,
  SessionFull,
};

NackReason nack_reason_for(ModelErrorCode code);
std::string_view to_string(NackReason reason);
std::optional<NackReason> parse_nack_reason(std::string_view text);

namespace msg {

struct Join {
  std::string display_name;
  friend bool operator==(const Join&, const Join&) = default;
};

struct MemberInfo {
  UserId user_id;
  std::string display_name;
  friend bool operator==(const MemberInfo&, const MemberInfo&) = default;
};

struct OwnershipEntry {
  ElementId object;
  UserId owner;
  friend bool operator==(const OwnershipEntry&, const OwnershipEntry&) = default;
};

struct Welcome {
  SessionId session;
  UserId user_id;
  ClassModel snapshot;
  std::uint64_t last_seq = 0;
  std::vector<MemberInfo> members;
  std::vector<OwnershipEntry> ownership;
  friend bool operator==(const Welcome&, const Welcome&) = default;
};

struct EventSubmit {
  std::uint64_t client_tag = 0;
  ModelEvent event;
  friend bool operator==(const EventSubmit&, const EventSubmit&) = default;
};

struct EventBroadcast {
  std::uint64_t seq = 0;
  UserId actor;
  std::optional<std::uint64_t> client_tag;
  ModelEvent event;
  friend bool operator==(const EventBroadcast&, const EventBroadcast&) = default;
};

// client_tag is set when rejecting an EventSubmit; object when rejecting a
// grab or release.
struct Nack {
  std::optional<std::uint64_t> client_tag;
  NackReason reason = NackReason::UnknownElement;
  std::optional<ElementId> object;
  friend bool operator==(const Nack&, const Nack&) = default;
};

struct GrabRequest {
  ElementId object;
  friend bool operator==(const GrabRequest&, const GrabRequest&) = default;
};

struct GrabGrant {
  ElementId object;
  UserId owner;
  friend bool operator==(const GrabGrant&, const GrabGrant&) = default;
};

struct GrabDeny {
  ElementId object;
  UserId owner;
  friend bool operator==(const GrabDeny&, const GrabDeny&) = default;
};

struct Release {
  ElementId object;
  Pose final_pose;
  friend bool operator==(const Release&, const Release&) = default;
};

struct PeerJoined {
  UserId user_id;
  std::string display_name;
  friend bool operator==(const PeerJoined&, const PeerJoined&) = default;
};

struct PeerLeft {
  UserId user_id;
  friend bool operator==(const PeerLeft&, const PeerLeft&) = default;
};

// Opaque voice payload; the server fills `sender` when relaying.
struct VoiceFrame {
  std::optional<UserId> sender;
  std::vector<std::uint8_t> data;
  friend bool operator==(const VoiceFrame&, const VoiceFrame&) = default;
};

struct Leave {
  friend bool operator==(const Leave&, const Leave&) = default;
};

}  // namespace msg

using ControlMessage =
    std::variant<msg::Join, msg::Welcome, msg::EventSubmit, msg::EventBroadcast, msg::Nack,
                 msg::GrabRequest, msg::GrabGrant, msg::GrabDeny, msg::Release, msg::PeerJoined,
                 msg::PeerLeft, msg::VoiceFrame, msg::Leave>;

std::string_view type_name(const ControlMessage& message);

enum class WireError : std::uint8_t {
  BadMagic,
  BadKind,
  BadLength,
  NonFinite,
  NonUnitQuaternion,
  BadGesture,
  MalformedJson,
  UnknownType,
  SchemaViolation,
};

std::string_view to_string(WireError error);

Frame encode_movement(const MovementPacket& packet);
Result<MovementPacket, WireError> decode_movement(std::span<const std::uint8_t> bytes);

Frame encode_presence(const PresencePacket& packet);
Result<PresencePacket, WireError> decode_presence(std::span<const std::uint8_t> bytes);

Frame encode_control(const ControlMessage& message);
Result<ControlMessage, WireError> decode_control(std::span<const std::uint8_t> bytes);

using AnyMessage = std::variant<MovementPacket, PresencePacket, ControlMessage>;

// Dispatches on the magic/kind prefix.
Result<AnyMessage, WireError> decode_frame(std::span<const std::uint8_t> bytes);

// Traffic class used for metrics and for choosing the lossy or reliable path.
enum class Channel : std::uint8_t { Control, Movement, Presence, Voice };

inline constexpr Channel kAllChannels[] = {Channel::Control, Channel::Movement, Channel::Presence,
                                           Channel::Voice};

std::string_view to_string(Channel channel);
// Binary frames classify by kind; every JSON frame reports Control.
Channel channel_of(std::span<const std::uint8_t> frame);
Channel channel_of(const ControlMessage& message);
// Movement and presence frames travel on the lossy path; all others are reliable.
inline bool is_lossy(Channel c) { return c == Channel::Movement || c == Channel::Presence; }

enum class Freshness : std::uint8_t { Accept, Stale };

// Plain integer comparison; 32-bit wraparound is not handled.
Freshness fresher(std::optional<std::uint32_t> last_seq, std::uint32_t incoming_seq);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);

}  // namespace modelsync::wire
