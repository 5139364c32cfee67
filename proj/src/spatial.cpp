#include "modelsync/spatial.hpp"

#include <cmath>
#include <numbers>

namespace modelsync::spatial {

namespace {

constexpr double kDegenerateHorizontal = 1e-6;

struct Dir {
  double x, y, z;
};

// Forward axis in double precision, straight from the quaternion.
Dir forward_d(const Quat& q) {
  const double x = q.x, y = q.y, z = q.z, w = q.w;
  return {2.0 * (x * z + w * y), 2.0 * (y * z - w * x), 1.0 - 2.0 * (x * x + y * y)};
}

}  // namespace

Vec3 forward(const Quat& orientation) {
  const Dir d = forward_d(orientation);
  return {static_cast<float>(d.x), static_cast<float>(d.y), static_cast<float>(d.z)};
}

std::optional<Vec3> teleport_target(const Pose& controller, double max_range) {
  const Dir d = forward_d(controller.orientation);
  if (d.y >= 0.0) return std::nullopt;
  const double ox = controller.position.x, oy = controller.position.y, oz = controller.position.z;
  const double t = -oy / d.y;
  if (t < 0.0) return std::nullopt;
  const double tx = ox + t * d.x;
  const double tz = oz + t * d.z;
  if (std::hypot(tx - ox, tz - oz) > max_range) return std::nullopt;
  return Vec3{static_cast<float>(tx), 0.0F, static_cast<float>(tz)};
}

double voice_gain(const Pose& listener, const Vec3& source, const AudioParams& params) {
  const double dx = double(source.x) - listener.position.x;
  const double dy = double(source.y) - listener.position.y;
  const double dz = double(source.z) - listener.position.z;
  const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (d <= params.min_distance) return 1.0;
  if (d >= params.max_distance) return 0.0;
  return (params.max_distance - d) / (params.max_distance - params.min_distance);
}

Result<double, Degenerate> voice_azimuth(const Pose& listener, const Vec3& source) {
  const double dx = double(source.x) - listener.position.x;
  const double dz = double(source.z) - listener.position.z;
  if (std::hypot(dx, dz) < kDegenerateHorizontal) return fail(Degenerate{});
  const Dir f = forward_d(listener.orientation);
  // Project forward onto the ground; left = up x forward = (f.z, 0, -f.x).
  const double fx = f.x, fz = f.z;
  const double ahead = dx * fx + dz * fz;
  const double left = dx * fz - dz * fx;
  double angle = std::atan2(left, ahead);
  if (angle <= -std::numbers::pi) angle += 2.0 * std::numbers::pi;
  return angle;
}

Vec3 label_anchor(const Pose& head) {
  return {head.position.x, head.position.y + kLabelHeight, head.position.z};
}

}  // namespace modelsync::spatial
