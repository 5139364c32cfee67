#pragma once

#include <optional>

#include "modelsync/pose.hpp"
#include "modelsync/result.hpp"

// Closed-form geometry of the shared space. Conventions: +Y is world up, the
// walkable ground is the plane y = 0, and a pose faces along its orientation
// applied to +Z. "Left" of a pose is up x forward.
namespace modelsync::spatial {

inline constexpr double kDefaultTeleportRange = 20.0;
inline constexpr float kLabelHeight = 0.3F;

struct AudioParams {
  double min_distance = 1.0;
  double max_distance = 15.0;

  bool valid() const { return min_distance > 0.0 && min_distance < max_distance; }
};

Vec3 forward(const Quat& orientation);

// Straight ray from the controller along its forward axis intersected with the
// ground. None when the ray does not descend, starts below ground, or lands
// farther than max_range (horizontal distance from the controller).
std::optional<Vec3> teleport_target(const Pose& controller, double max_range = kDefaultTeleportRange);

// Linear rolloff between min_distance (gain 1) and max_distance (gain 0).
double voice_gain(const Pose& listener, const Vec3& source, const AudioParams& params = {});

struct Degenerate {};

// Horizontal bearing of the source in the listener's frame, in (-pi, pi];
// positive when the source is to the listener's left.
Result<double, Degenerate> voice_azimuth(const Pose& listener, const Vec3& source);

// Name tag position: fixed world-up offset, independent of head orientation.
Vec3 label_anchor(const Pose& head);

}  // namespace modelsync::spatial
