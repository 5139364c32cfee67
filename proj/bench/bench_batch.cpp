// Serial vs OpenMP batch simulation over the randomized convergence scenarios.
//   bench_batch [scenarios=100] [repeats=3]
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "modelsync/batch.hpp"

using namespace modelsync;
using Clock = std::chrono::steady_clock;

int main(int argc, char** argv) {
  const std::size_t count = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 100;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  std::vector<std::uint64_t> seeds(count);
  std::iota(seeds.begin(), seeds.end(), 0);
  const sim::ScenarioFactory make = [](std::uint64_t seed) { return sim::random_scenario(seed); };

  auto best_of = [&](auto&& fn) {
    double best = 1e300;
    std::vector<sim::BatchResult> last;
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = Clock::now();
      last = fn();
      best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
    }
    return std::pair{best, std::move(last)};
  };

  auto [serial_s, serial] = best_of([&] { return sim::run_batch_serial(seeds, make); });
  auto [parallel_s, parallel] = best_of([&] { return sim::run_batch_parallel(seeds, make); });

  bool identical = serial.size() == parallel.size();
  for (std::size_t i = 0; identical && i < serial.size(); ++i) {
    identical = serial[i].report_bytes == parallel[i].report_bytes && serial[i].model_bytes == parallel[i].model_bytes;
  }
  const nlohmann::json out{{"scenarios", count},
                           {"threads", omp_get_max_threads()},
                           {"serial_s", serial_s},
                           {"parallel_s", parallel_s},
                           {"speedup", serial_s / parallel_s},
                           {"identical", identical}};
  std::cout << out.dump(2) << '\n';
  return identical ? 0 : 1;
}
