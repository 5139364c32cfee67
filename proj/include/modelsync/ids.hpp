#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace modelsync {

// 128-bit RFC 4122 identifier. The nil value is representable but never a
// valid id for any domain object.
class Uuid {
 public:
  using Bytes = std::array<std::uint8_t, 16>;

  constexpr Uuid() = default;
  explicit constexpr Uuid(const Bytes& bytes) : bytes_(bytes) {}

  // Version-4 id drawn from the given generator.
  static Uuid random(std::mt19937_64& rng);
  // Deterministic version-4-shaped id derived from a label; scenario files
  // use this so that "Vehicle" names the same element on every run.
  static Uuid from_label(std::string_view label);
  // Lower-case 8-4-4-4-12 hex form only.
  static std::optional<Uuid> parse(std::string_view text);
  static Uuid from_bytes(std::span<const std::uint8_t, 16> bytes);

  bool is_nil() const;
  const Bytes& bytes() const { return bytes_; }
  std::string to_string() const;

  friend auto operator<=>(const Uuid&, const Uuid&) = default;
  friend bool operator==(const Uuid&, const Uuid&) = default;

 private:
  Bytes bytes_{};
};

// Strong id types so element, user and session ids cannot be mixed up.
template <class Tag>
class TypedId {
 public:
  constexpr TypedId() = default;
  explicit constexpr TypedId(Uuid uuid) : uuid_(uuid) {}

  static TypedId random(std::mt19937_64& rng) { return TypedId(Uuid::random(rng)); }
  static TypedId from_label(std::string_view label) { return TypedId(Uuid::from_label(label)); }
  static std::optional<TypedId> parse(std::string_view text) {
    if (auto uuid = Uuid::parse(text)) {
      return TypedId(*uuid);
    }
    return std::nullopt;
  }

  const Uuid& uuid() const { return uuid_; }
  bool is_nil() const { return uuid_.is_nil(); }
  std::string to_string() const { return uuid_.to_string(); }

  friend auto operator<=>(const TypedId&, const TypedId&) = default;
  friend bool operator==(const TypedId&, const TypedId&) = default;

 private:
  Uuid uuid_;
};

struct ElementIdTag {};
struct UserIdTag {};
struct SessionIdTag {};

using ElementId = TypedId<ElementIdTag>;
using UserId = TypedId<UserIdTag>;
using SessionId = TypedId<SessionIdTag>;

}  // namespace modelsync
