#pragma once

#include <cstdint>

#include "modelsync/scenario.hpp"
#include "modelsync/sim.hpp"

// Seeded scenario builders used by the test suites and the batch runner.
namespace modelsync::sim {

struct GeneratedScenario {
  Scenario scenario;
  NetConfig net;
};

struct RandomLimits {
  std::size_t min_bots = 2;
  std::size_t max_bots = 8;
  std::size_t max_events = 500;
  std::size_t max_movement = 10000;
};

// Mixed edit/grab/voice/teleport traffic from 2..8 bots, some joining late and
// some leaving early. Network parameters are drawn from the same seed.
GeneratedScenario random_scenario(std::uint64_t seed, const RandomLimits& limits = {});

// "builder" submits at least min_events always-valid events, "witness" is
// present from the start, and "late" joins once the builder has finished.
GeneratedScenario late_join_scenario(std::uint64_t seed, std::size_t min_events = 200);

struct GrabReleaseCase {
  GeneratedScenario generated;
  ElementId object;
  Pose release_pose;
};

// One bot creates a class, drags it through a lossy stream and releases it at
// an explicit pose while a second bot watches.
GrabReleaseCase grab_release_scenario(std::uint64_t seed, double movement_loss = 0.3);

// A creator bot plus k contenders that all request the same object at the
// same virtual instant.
GeneratedScenario grab_race_scenario(std::uint64_t seed, std::size_t contenders);

// Label of the object every contender competes for.
inline constexpr const char* kRaceObjectLabel = "race-object";

}  // namespace modelsync::sim
