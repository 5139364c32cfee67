#pragma once

namespace modelsync {

// Meters, right-handed, +Y is world up.
struct Vec3 {
  float x = 0.0F;
  float y = 0.0F;
  float z = 0.0F;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct Quat {
  float x = 0.0F;
  float y = 0.0F;
  float z = 0.0F;
  float w = 1.0F;

  static Quat identity() { return {}; }
  // Right-hand rotation of `radians` about the given axis (need not be unit).
  static Quat from_axis_angle(Vec3 axis, double radians);

  friend bool operator==(const Quat&, const Quat&) = default;
};

struct Pose {
  Vec3 position;
  Quat orientation;

  static Pose identity() { return {}; }
  static Pose at(float x, float y, float z) { return {{x, y, z}, Quat::identity()}; }

  friend bool operator==(const Pose&, const Pose&) = default;
};

inline constexpr double kUnitQuatTolerance = 1e-3;

bool is_finite(const Vec3& v);
bool is_finite(const Quat& q);
double norm(const Quat& q);
bool is_unit(const Quat& q);
bool is_valid(const Pose& p);

Quat normalized(const Quat& q);
Quat operator*(const Quat& a, const Quat& b);
// Rotates v by q (q is assumed unit). Computed in double precision.
Vec3 rotate(const Quat& q, const Vec3& v);

// Straight-line position blend with normalized quaternion lerp, t in [0, 1].
Pose blend(const Pose& from, const Pose& to, double t);

}  // namespace modelsync
