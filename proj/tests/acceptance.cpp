// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include <json.hpp>

#include "modelsync/batch.hpp"
#include "modelsync/canonical_json.hpp"
#include "modelsync/persistence.hpp"
#include "modelsync/scenario_gen.hpp"
#include "modelsync/sim.hpp"
#include "modelsync/spatial.hpp"
#include "modelsync/wire.hpp"
#include "support.hpp"

using namespace modelsync;
using namespace modelsync::sim;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// Random multi-user sessions must all end with every replica equal to the server.
void convergence_and_order() {
  std::vector<std::uint64_t> seeds(100);
  std::iota(seeds.begin(), seeds.end(), 0);
  const auto start = Clock::now();
  const auto results = run_batch_parallel(seeds, [](std::uint64_t seed) { return random_scenario(seed); });
  const double elapsed = seconds_since(start);

  std::size_t converged = 0;
  std::uint64_t violations = 0;
  std::uint64_t events = 0;
  std::uint64_t max_events = 0;
  std::uint64_t max_movement = 0;
  std::size_t max_bots = 0;
  std::string first_bad;
  for (const auto& r : results) {
    max_events = std::max(max_events, r.report.events_broadcast);
    max_movement = std::max(max_movement, r.report.movement.sent);
    max_bots = std::max(max_bots, r.report.bots.size());
    if (r.valid && r.report.converged) {
      ++converged;
    } else if (first_bad.empty()) {
      first_bad = fmt(" first failure seed %llu: %s", (unsigned long long)r.seed,
                      r.valid ? r.report.final_diff.c_str() : "invalid scenario");
    }
    violations += r.report.order_violations;
    events += r.report.events_broadcast;
  }
  const bool within_limits = max_events <= 500 && max_movement <= 10000 && max_bots <= 8;
  verdict("convergence", converged == seeds.size() && elapsed < 60.0 && within_limits,
          fmt("%zu/%zu seeds converged in %.2f s (limit 60 s); largest session %zu bots, %llu events, %llu movement "
              "packets%s",
              converged, seeds.size(), elapsed, max_bots, (unsigned long long)max_events,
              (unsigned long long)max_movement, first_bad.c_str()));
  verdict("total-order", violations == 0,
          fmt("%llu out-of-order broadcasts over %llu events in 100 sessions", (unsigned long long)violations,
              (unsigned long long)events));
}

// Simultaneous grabs: one grant, every other contender denied, never two owners.
void ownership_exclusivity() {
  const ElementId object = ElementId::from_label(kRaceObjectLabel);
  std::size_t bad_trials = 0;
  std::size_t bad_steps = 0;
  std::string first_bad;
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + trial % 7;
    auto generated = grab_race_scenario(trial, k);
    Simulator simulator(generated.scenario, generated.net);
    while (simulator.step()) {
      std::uint64_t held = 0;
      for (std::size_t b = 0; b < simulator.bot_count(); ++b) held += simulator.bot(b).stats().grants;
      if (held > 1 || !check_invariants(simulator.session().state()).empty()) ++bad_steps;
    }
    std::uint64_t grants = 0;
    std::uint64_t denies = 0;
    for (std::size_t b = 1; b < simulator.bot_count(); ++b) {
      grants += simulator.bot(b).stats().grants;
      denies += simulator.bot(b).stats().denies;
    }
    const auto& ownership = simulator.session().state().ownership;
    const bool ok = grants == 1 && denies == k - 1 && ownership.size() <= 1 &&
                    (ownership.empty() || ownership.begin()->first == object);
    if (!ok) {
      ++bad_trials;
      if (first_bad.empty())
        first_bad = fmt(" first failure trial %llu: k=%zu grants=%llu denies=%llu", (unsigned long long)trial, k,
                        (unsigned long long)grants, (unsigned long long)denies);
    }
  }
  verdict("ownership", bad_trials == 0 && bad_steps == 0,
          fmt("1000 races with k in [2,8]: %zu trials without exactly one grant and k-1 denies, %zu steps with "
              "more than one holder or a broken invariant%s",
              bad_trials, bad_steps, first_bad.c_str()));
}

// A member joining after 200+ events rebuilds the same model from Welcome.
void late_join() {
  std::size_t ok = 0;
  std::uint64_t min_seq = UINT64_MAX;
  std::string first_bad;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto generated = late_join_scenario(seed, 200);
    Simulator simulator(generated.scenario, generated.net);
    simulator.run_to_quiescence();
    const auto& witness = simulator.bot(1);
    const auto& late = simulator.bot(2);
    const auto server_bytes = canonical_model_bytes(simulator.session().state().model);
    const auto welcome_seq = late.stats().welcome_last_seq;
    bool pass = welcome_seq && *welcome_seq >= 200 && late.replica() && witness.replica() &&
                canonical_model_bytes(late.replica()->committed()) == server_bytes &&
                canonical_model_bytes(witness.replica()->committed()) == server_bytes &&
                late.replica()->last_applied_seq() == simulator.session().last_seq();
    if (welcome_seq) min_seq = std::min(min_seq, *welcome_seq);
    if (pass) {
      ++ok;
    } else if (first_bad.empty()) {
      first_bad = fmt(" first failure seed %llu", (unsigned long long)seed);
    }
  }
  verdict("late-join", ok == 50,
          fmt("%zu/50 late joiners match witness and server; smallest Welcome seq %llu (need >= 200)%s", ok,
              (unsigned long long)min_seq, first_bad.c_str()));
}

// Binary sizes, lossless round trips, and presence bandwidth at 20 Hz.
void codec() {
  std::mt19937_64 rng(1);
  const auto pool = testing::id_pool(rng, 8);
  std::size_t mismatches = 0;
  std::size_t wrong_size = 0;
  for (int i = 0; i < 10000; ++i) {
    const wire::MovementPacket m{ElementId::random(rng), std::uint32_t(rng()), testing::random_pose(rng)};
    const auto mf = wire::encode_movement(m);
    wrong_size += mf.size() != wire::kMovementFrameSize || mf.size() != 50;
    auto md = wire::decode_movement(mf);
    mismatches += !md || !(*md == m);

    const auto p = testing::random_presence(rng);
    const auto pf = wire::encode_presence(p);
    wrong_size += pf.size() != wire::kPresenceFrameSize || pf.size() != 108;
    auto pd = wire::decode_presence(pf);
    mismatches += !pd || !(*pd == p);

    const auto c = testing::random_control(rng, pool);
    auto cd = wire::decode_control(wire::encode_control(c));
    mismatches += !cd || !(*cd == c);
  }
  verdict("codec-roundtrip", mismatches == 0 && wrong_size == 0,
          fmt("3x10^4 round trips: %zu mismatches, %zu frames not 50 B (movement) / 108 B (presence)", mismatches,
              wrong_size));

  constexpr std::int64_t kDurationMs = 10000;
  Scenario scenario{{BotScript{"solo", 20.0, {Action{0, act::Join{}}, Action{kDurationMs, act::WaitMs{0}}}}}};
  Simulator simulator(scenario, NetConfig{});
  simulator.run_to_quiescence();
  const auto report = simulator.report();
  const double rate = double(report.bytes_per_channel.presence) / (double(kDurationMs) / 1000.0);
  verdict("presence-bandwidth", std::abs(rate - 2160.0) <= 108.0,
          fmt("%.1f B/s presence uplink for one member at 20 Hz (expected 2160 +/- 108)", rate));
}

// Independent forward axis: third column of the rotation matrix of q.
struct Ray {
  double ox, oy, oz, dx, dy, dz;
};
Ray controller_ray(const Pose& c) {
  const double x = c.orientation.x, y = c.orientation.y, z = c.orientation.z, w = c.orientation.w;
  const double n = std::sqrt(x * x + y * y + z * z + w * w);
  const double qx = x / n, qy = y / n, qz = z / n, qw = w / n;
  return {c.position.x,
          c.position.y,
          c.position.z,
          2.0 * (qx * qz + qw * qy),
          2.0 * (qy * qz - qw * qx),
          1.0 - 2.0 * (qx * qx + qy * qy)};
}

void geometry() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t hits = 0;
  std::size_t off_ground = 0;
  std::size_t disagree = 0;
  double worst = 0.0;
  std::size_t attempts = 0;
  while (hits < 10000 && attempts < 1000000) {
    ++attempts;
    Pose c;
    c.position = {float(10.0 * u(rng)), float(1.5 + u(rng)), float(10.0 * u(rng))};
    c.orientation = testing::random_unit_quat(rng);
    const Ray r = controller_ray(c);
    const auto got = spatial::teleport_target(c, 20.0);
    if (r.dy >= 0.0) {
      disagree += got.has_value();
      continue;
    }
    if (r.dy > -1e-3) continue;
    const double t = -r.oy / r.dy;
    const double ex = r.ox + t * r.dx, ez = r.oz + t * r.dz;
    const double reach = std::hypot(ex - r.ox, ez - r.oz);
    if (std::abs(reach - 20.0) < 1e-3) continue;
    if (reach > 20.0) {
      disagree += got.has_value();
      continue;
    }
    if (!got) {
      ++disagree;
      continue;
    }
    ++hits;
    off_ground += got->y != 0.0F;
    worst = std::max(worst, std::hypot(got->x - ex, got->z - ez));
  }
  verdict("teleport", hits == 10000 && off_ground == 0 && disagree == 0 && worst <= 1e-5,
          fmt("%zu landings, %zu off the ground plane, %zu disagreements on reachability, worst residual %.3g m "
              "(limit 1e-5)",
              hits, off_ground, disagree, worst));

  const spatial::AudioParams params{1.0, 15.0};
  const double g8 = spatial::voice_gain(Pose::identity(), {8.0F, 0.0F, 0.0F}, params);
  double worst_gain = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Pose listener = testing::random_pose(rng);
    const Vec3 source = testing::random_pose(rng, 20.0).position;
    const double d = std::hypot(double(source.x) - listener.position.x, double(source.y) - listener.position.y,
                                double(source.z) - listener.position.z);
    const double expected = std::clamp((params.max_distance - d) / (params.max_distance - params.min_distance), 0.0, 1.0);
    worst_gain = std::max(worst_gain, std::abs(spatial::voice_gain(listener, source, params) - expected));
  }
  verdict("voice-gain", std::abs(g8 - 0.5) <= 1e-6 && worst_gain <= 1e-6,
          fmt("gain at 8 m = %.9f (expected 0.5 +/- 1e-6); worst deviation from linear rolloff %.3g", g8,
              worst_gain));

  double worst_shift = 0.0;
  std::size_t checked = 0;
  std::size_t wrong_side = 0;
  for (int i = 0; i < 10000; ++i) {
    Pose listener = testing::random_pose(rng);
    const Vec3 source = testing::random_pose(rng).position;
    const auto a = spatial::voice_azimuth(listener, source);
    const Vec3 offset = {float(5.0 * u(rng)), float(5.0 * u(rng)), float(5.0 * u(rng))};
    Pose moved = listener;
    moved.position = {listener.position.x + offset.x, listener.position.y + offset.y, listener.position.z + offset.z};
    const Vec3 moved_source = {source.x + offset.x, source.y + offset.y, source.z + offset.z};
    const auto b = spatial::voice_azimuth(moved, moved_source);
    if (!a || !b) continue;
    const double dx = double(source.x) - listener.position.x;
    const double dz = double(source.z) - listener.position.z;
    if (std::hypot(dx, dz) < 0.05) continue;
    ++checked;
    worst_shift = std::max(worst_shift, std::abs(std::remainder(*a - *b, 2.0 * std::numbers::pi)));
  }
  // Facing +Z with +Y up, left is +X.
  const auto left = spatial::voice_azimuth(Pose::identity(), {3.0F, 0.0F, 0.0F});
  wrong_side += !left || std::abs(*left - std::numbers::pi / 2) > 1e-6;
  verdict("voice-azimuth", checked > 9000 && worst_shift <= 1e-5 && wrong_side == 0,
          fmt("%zu translated pairs, worst azimuth change %.3g rad (limit 1e-5); source at +X reads %+.6f rad", checked,
              worst_shift, left ? *left : std::nan("")));
}

// The checked-in five-class session replays to a valid, exportable model.
void five_class_replay() {
  const auto start = Clock::now();
  const auto text = persistence::read_file(std::string(MODELSYNC_SOURCE_DIR) + "/scenarios/five_class_split.json");
  if (!text) {
    verdict("five-class-replay", false, text.error().reason);
    return;
  }
  auto scenario = scenario_from_json(nlohmann::json::parse(*text));
  if (!scenario) {
    verdict("five-class-replay", false, scenario.error().reason);
    return;
  }
  Simulator simulator(*scenario, NetConfig{80.0, 20.0, 0.1, 11});
  simulator.run_to_quiescence();
  const auto& model = simulator.session().state().model;
  const auto violations = validate(model);
  const auto uml = persistence::export_plantuml(model);
  std::size_t blocks = 0;
  for (std::size_t pos = 0; (pos = uml.find("\nclass ", pos)) != std::string::npos; ++pos) ++blocks;
  const bool converged = simulator.report().converged;
  const double elapsed = seconds_since(start);
  verdict("five-class-replay",
          converged && violations.empty() && blocks == 5 && model.classes.size() == 5 && elapsed < 5.0,
          fmt("converged=%s, %zu validation violations, %zu class blocks in export (expected 5), %.2f s (limit 5 s)",
              converged ? "true" : "false", violations.size(), blocks, elapsed));
}

// A drag over a 30%-lossy stream still lands exactly on the released pose.
void grab_move_release() {
  std::size_t ok = 0;
  std::string first_bad;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto c = grab_release_scenario(seed, 0.3);
    Simulator simulator(c.generated.scenario, c.generated.net);
    simulator.run_to_quiescence();
    const auto& model = simulator.session().state().model;
    bool pass = model.classes.contains(c.object) && model.classes.at(c.object).pose == c.release_pose &&
                simulator.session().state().ownership.empty();
    for (std::size_t b = 0; b < simulator.bot_count(); ++b) {
      const auto& replica = simulator.bot(b).replica();
      pass = pass && replica && replica->committed().classes.contains(c.object) &&
             replica->committed().classes.at(c.object).pose == c.release_pose &&
             replica->effective_pose(c.object) == c.release_pose;
    }
    if (pass) {
      ++ok;
    } else if (first_bad.empty()) {
      first_bad = fmt(" first failure seed %llu", (unsigned long long)seed);
    }
  }
  verdict("grab-move-release", ok == 100,
          fmt("%zu/100 drags at 30%% movement loss end with server and every replica at the release pose%s", ok,
              first_bad.c_str()));
}

}  // namespace

int main() {
  convergence_and_order();
  ownership_exclusivity();
  late_join();
  codec();
  geometry();
  five_class_replay();
  grab_move_release();
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
