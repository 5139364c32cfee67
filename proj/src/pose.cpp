#include "modelsync/pose.hpp"

#include <cmath>

namespace modelsync {

Quat Quat::from_axis_angle(Vec3 axis, double radians) {
  const double len = std::sqrt(double(axis.x) * axis.x + double(axis.y) * axis.y +
                               double(axis.z) * axis.z);
  if (len == 0.0) return identity();
  const double s = std::sin(radians / 2.0) / len;
  return {static_cast<float>(axis.x * s), static_cast<float>(axis.y * s),
          static_cast<float>(axis.z * s), static_cast<float>(std::cos(radians / 2.0))};
}

bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

bool is_finite(const Quat& q) {
  return std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z) && std::isfinite(q.w);
}

double norm(const Quat& q) {
  return std::sqrt(double(q.x) * q.x + double(q.y) * q.y + double(q.z) * q.z +
                   double(q.w) * q.w);
}

bool is_unit(const Quat& q) {
  return is_finite(q) && std::abs(norm(q) - 1.0) <= kUnitQuatTolerance;
}

bool is_valid(const Pose& p) { return is_finite(p.position) && is_unit(p.orientation); }

Quat normalized(const Quat& q) {
  const double n = norm(q);
  if (n == 0.0 || !std::isfinite(n)) return Quat::identity();
  return {static_cast<float>(q.x / n), static_cast<float>(q.y / n), static_cast<float>(q.z / n),
          static_cast<float>(q.w / n)};
}

Quat operator*(const Quat& a, const Quat& b) {
  const double ax = a.x, ay = a.y, az = a.z, aw = a.w;
  const double bx = b.x, by = b.y, bz = b.z, bw = b.w;
  return {static_cast<float>(aw * bx + ax * bw + ay * bz - az * by),
          static_cast<float>(aw * by - ax * bz + ay * bw + az * bx),
          static_cast<float>(aw * bz + ax * by - ay * bx + az * bw),
          static_cast<float>(aw * bw - ax * bx - ay * by - az * bz)};
}

Vec3 rotate(const Quat& q, const Vec3& v) {
  // v' = v + 2w(u x v) + 2u x (u x v)
  const double ux = q.x, uy = q.y, uz = q.z, w = q.w;
  const double vx = v.x, vy = v.y, vz = v.z;
  const double cx = uy * vz - uz * vy;
  const double cy = uz * vx - ux * vz;
  const double cz = ux * vy - uy * vx;
  const double ccx = uy * cz - uz * cy;
  const double ccy = uz * cx - ux * cz;
  const double ccz = ux * cy - uy * cx;
  return {static_cast<float>(vx + 2.0 * (w * cx + ccx)),
          static_cast<float>(vy + 2.0 * (w * cy + ccy)),
          static_cast<float>(vz + 2.0 * (w * cz + ccz))};
}

Pose blend(const Pose& from, const Pose& to, double t) {
  if (t <= 0.0) return from;
  if (t >= 1.0) return to;
  auto lerp = [t](float a, float b) { return static_cast<float>(a + (double(b) - a) * t); };
  Quat b = to.orientation;
  const double dot = double(from.orientation.x) * b.x + double(from.orientation.y) * b.y +
                     double(from.orientation.z) * b.z + double(from.orientation.w) * b.w;
  if (dot < 0.0) b = {-b.x, -b.y, -b.z, -b.w};
  Pose out;
  out.position = {lerp(from.position.x, to.position.x), lerp(from.position.y, to.position.y),
                  lerp(from.position.z, to.position.z)};
  out.orientation = normalized({lerp(from.orientation.x, b.x), lerp(from.orientation.y, b.y),
                                lerp(from.orientation.z, b.z), lerp(from.orientation.w, b.w)});
  return out;
}

}  // namespace modelsync
