#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "modelsync/scenario_gen.hpp"
#include "modelsync/sim.hpp"

namespace modelsync::sim {

struct BatchResult {
  std::uint64_t seed = 0;
  bool valid = false;        // false when the generated scenario was rejected
  SimReport report;
  std::string report_bytes;  // canonical JSON of the report
  std::string model_bytes;   // canonical server model after quiescence
};

using ScenarioFactory = std::function<GeneratedScenario(std::uint64_t seed)>;

// Reference implementation: one simulation after another.
std::vector<BatchResult> run_batch_serial(std::span<const std::uint64_t> seeds, const ScenarioFactory& make,
                                          const server::ServerConfig& config = {});

// Independent simulations spread over OpenMP threads. Results are in seed
// order and byte-identical to run_batch_serial. The factory must be safe to
// call concurrently.
std::vector<BatchResult> run_batch_parallel(std::span<const std::uint64_t> seeds, const ScenarioFactory& make,
                                            const server::ServerConfig& config = {});

}  // namespace modelsync::sim
