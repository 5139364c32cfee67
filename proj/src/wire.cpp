#include "modelsync/wire.hpp"

#include <array>
#include <bit>
#include <cmath>

#include "modelsync/model_json.hpp"

namespace modelsync::wire {

namespace {

using json_io::json;
using json_io::SchemaError;

constexpr std::array<std::string_view, 8> kNackNames = {
    "UnknownElement", "DuplicateId", "InvalidText", "DanglingEndpoint",
    "InvalidPose",    "InvalidId",   "NotOwner",    "SessionFull",
};

constexpr std::array<std::string_view, 13> kTypeNames = {
    "Join",       "Welcome",  "EventSubmit", "EventBroadcast", "Nack",
    "GrabRequest", "GrabGrant", "GrabDeny",   "Release",        "PeerJoined",
    "PeerLeft",    "VoiceFrame", "Leave",
};

class Writer {
 public:
  explicit Writer(std::size_t size) { out_.reserve(size); }

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void uuid(const Uuid& id) { out_.insert(out_.end(), id.bytes().begin(), id.bytes().end()); }
  void pose(const Pose& p) {
    f32(p.position.x);
    f32(p.position.y);
    f32(p.position.z);
    f32(p.orientation.x);
    f32(p.orientation.y);
    f32(p.orientation.z);
    f32(p.orientation.w);
  }
  Frame take() { return std::move(out_); }

 private:
  Frame out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return in_[pos_++]; }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(in_[pos_++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  Uuid uuid() {
    auto id = Uuid::from_bytes(in_.subspan(pos_).first<16>());
    pos_ += 16;
    return id;
  }
  Pose pose() {
    Pose p;
    p.position.x = f32();
    p.position.y = f32();
    p.position.z = f32();
    p.orientation.x = f32();
    p.orientation.y = f32();
    p.orientation.z = f32();
    p.orientation.w = f32();
    return p;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::optional<WireError> check_header(std::span<const std::uint8_t> bytes, std::uint8_t kind,
                                      std::size_t size) {
  if (bytes.empty()) return WireError::BadLength;
  if (bytes[0] != kBinaryMagic) return WireError::BadMagic;
  if (bytes.size() < 2) return WireError::BadLength;
  if (bytes[1] != kind) return WireError::BadKind;
  if (bytes.size() != size) return WireError::BadLength;
  return std::nullopt;
}

std::optional<WireError> check_pose(const Pose& p) {
  if (!is_finite(p.position) || !is_finite(p.orientation)) return WireError::NonFinite;
  if (!is_unit(p.orientation)) return WireError::NonUnitQuaternion;
  return std::nullopt;
}

std::optional<GestureState> gesture_from_byte(std::uint8_t b) {
  if (b > static_cast<std::uint8_t>(GestureState::ThumbsUp)) return std::nullopt;
  return static_cast<GestureState>(b);
}

json optional_tag(const std::optional<std::uint64_t>& tag) {
  return tag ? json(*tag) : json(nullptr);
}

std::optional<std::uint64_t> optional_tag_from(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return json_io::u64_field(obj, key);
}

struct ControlWriter {
  json operator()(const msg::Join& m) const { return {{"type", "Join"}, {"display_name", m.display_name}}; }

  json operator()(const msg::Welcome& m) const {
    json members = json::array();
    for (const auto& member : m.members) {
      members.push_back({{"user_id", member.user_id.to_string()}, {"display_name", member.display_name}});
    }
    json ownership = json::array();
    for (const auto& entry : m.ownership) {
      ownership.push_back({{"object", entry.object.to_string()}, {"owner", entry.owner.to_string()}});
    }
    return {{"type", "Welcome"},
            {"session", m.session.to_string()},
            {"user_id", m.user_id.to_string()},
            {"snapshot", json_io::to_json(m.snapshot)},
            {"last_seq", m.last_seq},
            {"members", std::move(members)},
            {"ownership", std::move(ownership)}};
  }

  json operator()(const msg::EventSubmit& m) const {
    return {{"type", "EventSubmit"}, {"client_tag", m.client_tag}, {"event", json_io::to_json(m.event)}};
  }

  json operator()(const msg::EventBroadcast& m) const {
    json j{{"type", "EventBroadcast"},
           {"seq", m.seq},
           {"actor", m.actor.to_string()},
           {"event", json_io::to_json(m.event)}};
    if (m.client_tag) j["client_tag"] = *m.client_tag;
    return j;
  }

  json operator()(const msg::Nack& m) const {
    json j{{"type", "Nack"}, {"reason", std::string(to_string(m.reason))}};
    j["client_tag"] = optional_tag(m.client_tag);
    if (m.object) j["object"] = m.object->to_string();
    return j;
  }

  json operator()(const msg::GrabRequest& m) const {
    return {{"type", "GrabRequest"}, {"object", m.object.to_string()}};
  }
  json operator()(const msg::GrabGrant& m) const {
    return {{"type", "GrabGrant"}, {"object", m.object.to_string()}, {"owner", m.owner.to_string()}};
  }
  json operator()(const msg::GrabDeny& m) const {
    return {{"type", "GrabDeny"}, {"object", m.object.to_string()}, {"owner", m.owner.to_string()}};
  }
  json operator()(const msg::Release& m) const {
    return {{"type", "Release"}, {"object", m.object.to_string()}, {"final_pose", json_io::to_json(m.final_pose)}};
  }
  json operator()(const msg::PeerJoined& m) const {
    return {{"type", "PeerJoined"}, {"user_id", m.user_id.to_string()}, {"display_name", m.display_name}};
  }
  json operator()(const msg::PeerLeft& m) const {
    return {{"type", "PeerLeft"}, {"user_id", m.user_id.to_string()}};
  }
  json operator()(const msg::VoiceFrame& m) const {
    json j{{"type", "VoiceFrame"}, {"data", base64_encode(m.data)}};
    if (m.sender) j["sender"] = m.sender->to_string();
    return j;
  }
  json operator()(const msg::Leave&) const { return {{"type", "Leave"}}; }
};

ControlMessage control_from_json(const json& j) {
  using json_io::field;
  using json_io::id_from_json;
  using json_io::string_field;
  using json_io::u64_field;

  const std::string type = string_field(j, "type");
  if (type == "Join") return msg::Join{string_field(j, "display_name")};
  if (type == "Welcome") {
    msg::Welcome m;
    m.session = id_from_json<SessionId>(field(j, "session"));
    m.user_id = id_from_json<UserId>(field(j, "user_id"));
    m.snapshot = json_io::model_from_json(field(j, "snapshot"));
    m.last_seq = u64_field(j, "last_seq");
    const json& members = field(j, "members");
    const json& ownership = field(j, "ownership");
    if (!members.is_array() || !ownership.is_array()) throw SchemaError("members/ownership must be arrays");
    for (const auto& member : members) {
      m.members.push_back({id_from_json<UserId>(field(member, "user_id")), string_field(member, "display_name")});
    }
    for (const auto& entry : ownership) {
      m.ownership.push_back({id_from_json<ElementId>(field(entry, "object")),
                             id_from_json<UserId>(field(entry, "owner"))});
    }
    return m;
  }
  if (type == "EventSubmit") {
    return msg::EventSubmit{u64_field(j, "client_tag"), json_io::event_from_json(field(j, "event"))};
  }
  if (type == "EventBroadcast") {
    return msg::EventBroadcast{u64_field(j, "seq"), id_from_json<UserId>(field(j, "actor")),
                               optional_tag_from(j, "client_tag"),
                               json_io::event_from_json(field(j, "event"))};
  }
  if (type == "Nack") {
    msg::Nack m;
    m.client_tag = optional_tag_from(j, "client_tag");
    auto reason = parse_nack_reason(string_field(j, "reason"));
    if (!reason) throw SchemaError("unknown nack reason");
    m.reason = *reason;
    if (auto it = j.find("object"); it != j.end() && !it->is_null()) m.object = id_from_json<ElementId>(*it);
    return m;
  }
  if (type == "GrabRequest") return msg::GrabRequest{id_from_json<ElementId>(field(j, "object"))};
  if (type == "GrabGrant") {
    return msg::GrabGrant{id_from_json<ElementId>(field(j, "object")), id_from_json<UserId>(field(j, "owner"))};
  }
  if (type == "GrabDeny") {
    return msg::GrabDeny{id_from_json<ElementId>(field(j, "object")), id_from_json<UserId>(field(j, "owner"))};
  }
  if (type == "Release") {
    return msg::Release{id_from_json<ElementId>(field(j, "object")), json_io::pose_from_json(field(j, "final_pose"))};
  }
  if (type == "PeerJoined") {
    return msg::PeerJoined{id_from_json<UserId>(field(j, "user_id")), string_field(j, "display_name")};
  }
  if (type == "PeerLeft") return msg::PeerLeft{id_from_json<UserId>(field(j, "user_id"))};
  if (type == "VoiceFrame") {
    msg::VoiceFrame m;
    auto data = base64_decode(string_field(j, "data"));
    if (!data) throw SchemaError("voice data is not base64");
    m.data = std::move(*data);
    if (auto it = j.find("sender"); it != j.end() && !it->is_null()) m.sender = id_from_json<UserId>(*it);
    return m;
  }
  if (type == "Leave") return msg::Leave{};
  throw std::invalid_argument(type);
}

constexpr char kBase64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int base64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

NackReason nack_reason_for(ModelErrorCode code) {
  switch (code) {
    case ModelErrorCode::UnknownElement:
      return NackReason::UnknownElement;
    case ModelErrorCode::DuplicateId:
      return NackReason::DuplicateId;
    case ModelErrorCode::InvalidText:
      return NackReason::InvalidText;
    case ModelErrorCode::DanglingEndpoint:
      return NackReason::DanglingEndpoint;
    case ModelErrorCode::InvalidPose:
      return NackReason::InvalidPose;
    case ModelErrorCode::InvalidId:
      return NackReason::InvalidId;
  }
  return NackReason::UnknownElement;
}

std::string_view to_string(NackReason reason) { return kNackNames[static_cast<std::size_t>(reason)]; }

std::optional<NackReason> parse_nack_reason(std::string_view text) {
  for (std::size_t i = 0; i < kNackNames.size(); ++i) {
    if (kNackNames[i] == text) return static_cast<NackReason>(i);
  }
  return std::nullopt;
}

std::string_view type_name(const ControlMessage& message) { return kTypeNames[message.index()]; }

std::string_view to_string(WireError error) {
  switch (error) {
    case WireError::BadMagic:
      return "BadMagic";
    case WireError::BadKind:
      return "BadKind";
    case WireError::BadLength:
      return "BadLength";
    case WireError::NonFinite:
      return "NonFinite";
    case WireError::NonUnitQuaternion:
      return "NonUnitQuaternion";
    case WireError::BadGesture:
      return "BadGesture";
    case WireError::MalformedJson:
      return "MalformedJson";
    case WireError::UnknownType:
      return "UnknownType";
    case WireError::SchemaViolation:
      return "SchemaViolation";
  }
  return "Unknown";
}

Frame encode_movement(const MovementPacket& packet) {
  Writer w(kMovementFrameSize);
  w.u8(kBinaryMagic);
  w.u8(kMovementKind);
  w.uuid(packet.subject.uuid());
  w.u32(packet.seq);
  w.pose(packet.pose);
  return w.take();
}

Result<MovementPacket, WireError> decode_movement(std::span<const std::uint8_t> bytes) {
  if (auto err = check_header(bytes, kMovementKind, kMovementFrameSize)) return fail(*err);
  Reader r(bytes.subspan(2));
  MovementPacket p;
  p.subject = ElementId(r.uuid());
  p.seq = r.u32();
  p.pose = r.pose();
  if (auto err = check_pose(p.pose)) return fail(*err);
  return p;
}

Frame encode_presence(const PresencePacket& packet) {
  Writer w(kPresenceFrameSize);
  w.u8(kBinaryMagic);
  w.u8(kPresenceKind);
  w.uuid(packet.user.uuid());
  w.u32(packet.seq);
  w.pose(packet.head);
  w.pose(packet.left_hand);
  w.pose(packet.right_hand);
  w.u8(static_cast<std::uint8_t>(packet.left_gesture));
  w.u8(static_cast<std::uint8_t>(packet.right_gesture));
  return w.take();
}

Result<PresencePacket, WireError> decode_presence(std::span<const std::uint8_t> bytes) {
  if (auto err = check_header(bytes, kPresenceKind, kPresenceFrameSize)) return fail(*err);
  Reader r(bytes.subspan(2));
  PresencePacket p;
  p.user = UserId(r.uuid());
  p.seq = r.u32();
  p.head = r.pose();
  p.left_hand = r.pose();
  p.right_hand = r.pose();
  const auto left = gesture_from_byte(r.u8());
  const auto right = gesture_from_byte(r.u8());
  for (const Pose* pose : {&p.head, &p.left_hand, &p.right_hand}) {
    if (auto err = check_pose(*pose)) return fail(*err);
  }
  if (!left || !right) return fail(WireError::BadGesture);
  p.left_gesture = *left;
  p.right_gesture = *right;
  return p;
}

Frame encode_control(const ControlMessage& message) {
  const std::string body = std::visit(ControlWriter{}, message).dump();
  Frame out;
  out.reserve(body.size() + 1);
  out.push_back(kControlMagic);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Result<ControlMessage, WireError> decode_control(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return fail(WireError::BadLength);
  if (bytes[0] != kControlMagic) return fail(WireError::BadMagic);
  json j = json::parse(bytes.begin() + 1, bytes.end(), nullptr, false);
  if (j.is_discarded()) return fail(WireError::MalformedJson);
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) return fail(WireError::SchemaViolation);
  try {
    return control_from_json(j);
  } catch (const SchemaError&) {
    return fail(WireError::SchemaViolation);
  } catch (const std::invalid_argument&) {
    return fail(WireError::UnknownType);
  } catch (const json::exception&) {
    return fail(WireError::SchemaViolation);
  }
}

Result<AnyMessage, WireError> decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return fail(WireError::BadLength);
  if (bytes[0] == kControlMagic) {
    auto m = decode_control(bytes);
    if (!m) return fail(m.error());
    return AnyMessage(std::move(m).value());
  }
  if (bytes[0] != kBinaryMagic) return fail(WireError::BadMagic);
  if (bytes.size() < 2) return fail(WireError::BadLength);
  if (bytes[1] == kMovementKind) {
    auto m = decode_movement(bytes);
    if (!m) return fail(m.error());
    return AnyMessage(*m);
  }
  if (bytes[1] == kPresenceKind) {
    auto m = decode_presence(bytes);
    if (!m) return fail(m.error());
    return AnyMessage(*m);
  }
  return fail(WireError::BadKind);
}

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::Control:
      return "control";
    case Channel::Movement:
      return "movement";
    case Channel::Presence:
      return "presence";
    case Channel::Voice:
      return "voice";
  }
  return "control";
}

Channel channel_of(std::span<const std::uint8_t> frame) {
  if (frame.size() >= 2 && frame[0] == kBinaryMagic) {
    if (frame[1] == kMovementKind) return Channel::Movement;
    if (frame[1] == kPresenceKind) return Channel::Presence;
  }
  return Channel::Control;
}

Channel channel_of(const ControlMessage& message) {
  return std::holds_alternative<msg::VoiceFrame>(message) ? Channel::Voice : Channel::Control;
}

Freshness fresher(std::optional<std::uint32_t> last_seq, std::uint32_t incoming_seq) {
  if (!last_seq || incoming_seq > *last_seq) return Freshness::Accept;
  return Freshness::Stale;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = std::uint32_t(bytes[i]) << 16 | std::uint32_t(bytes[i + 1]) << 8 | bytes[i + 2];
    out.push_back(kBase64Alphabet[v >> 18 & 63]);
    out.push_back(kBase64Alphabet[v >> 12 & 63]);
    out.push_back(kBase64Alphabet[v >> 6 & 63]);
    out.push_back(kBase64Alphabet[v & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = std::uint32_t(bytes[i]) << 16;
    if (rest == 2) v |= std::uint32_t(bytes[i + 1]) << 8;
    out.push_back(kBase64Alphabet[v >> 18 & 63]);
    out.push_back(kBase64Alphabet[v >> 12 & 63]);
    out.push_back(rest == 2 ? kBase64Alphabet[v >> 6 & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) return std::nullopt;
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && last && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = base64_value(c);
      if (d < 0 || pad > 0) return std::nullopt;
      v = v << 6 | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

}  // namespace modelsync::wire
