#include "modelsync/ids.hpp"

#include <algorithm>

namespace modelsync {

namespace {

constexpr char kHex[] = "0123456789abcdef";

void stamp_v4(Uuid::Bytes& b) {
  b[6] = static_cast<std::uint8_t>((b[6] & 0x0F) | 0x40);
  b[8] = static_cast<std::uint8_t>((b[8] & 0x3F) | 0x80);
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void fill(Uuid::Bytes& b, std::uint64_t hi, std::uint64_t lo) {
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
    b[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
  }
}

}  // namespace

Uuid Uuid::random(std::mt19937_64& rng) {
  Bytes b{};
  do {
    const std::uint64_t hi = rng();
    const std::uint64_t lo = rng();
    fill(b, hi, lo);
    stamp_v4(b);
  } while (std::all_of(b.begin(), b.end(), [](std::uint8_t v) { return v == 0; }));
  return Uuid(b);
}

Uuid Uuid::from_label(std::string_view label) {
  // FNV-1a seeds two splitmix streams.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  std::uint64_t state = h;
  const std::uint64_t hi = splitmix64(state);
  const std::uint64_t lo = splitmix64(state);
  Bytes b{};
  fill(b, hi, lo);
  stamp_v4(b);
  return Uuid(b);
}

std::optional<Uuid> Uuid::parse(std::string_view text) {
  if (text.size() != 36) return std::nullopt;
  Bytes b{};
  std::size_t out = 0;
  for (std::size_t i = 0; i < text.size();) {
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (text[i] != '-') return std::nullopt;
      ++i;
      continue;
    }
    const int hi = hex_value(text[i]);
    const int lo = hex_value(text[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    b[out++] = static_cast<std::uint8_t>(hi << 4 | lo);
    i += 2;
  }
  return Uuid(b);
}

Uuid Uuid::from_bytes(std::span<const std::uint8_t, 16> bytes) {
  Bytes b{};
  std::copy(bytes.begin(), bytes.end(), b.begin());
  return Uuid(b);
}

bool Uuid::is_nil() const {
  return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t v) { return v == 0; });
}

std::string Uuid::to_string() const {
  std::string s;
  s.reserve(36);
  for (std::size_t i = 0; i < bytes_.size(); ++i) {
    if (i == 4 || i == 6 || i == 8 || i == 10) s.push_back('-');
    s.push_back(kHex[bytes_[i] >> 4]);
    s.push_back(kHex[bytes_[i] & 0x0F]);
  }
  return s;
}

}  // namespace modelsync
