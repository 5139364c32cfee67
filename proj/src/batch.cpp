#include "modelsync/batch.hpp"

#include "modelsync/canonical_json.hpp"

namespace modelsync::sim {

namespace {

BatchResult run_one(std::uint64_t seed, const ScenarioFactory& make, const server::ServerConfig& config) {
  BatchResult result;
  result.seed = seed;
  const GeneratedScenario generated = make(seed);
  if (!validate(generated.scenario) || !generated.net.valid()) return result;
  Simulator sim(generated.scenario, generated.net, config);
  sim.run_to_quiescence();
  result.valid = true;
  result.report = sim.report();
  result.report_bytes = canonical_dump(result.report.to_json());
  result.model_bytes = canonical_model_bytes(sim.session().state().model);
  return result;
}

}  // namespace

std::vector<BatchResult> run_batch_serial(std::span<const std::uint64_t> seeds, const ScenarioFactory& make,
                                          const server::ServerConfig& config) {
  std::vector<BatchResult> results;
  results.reserve(seeds.size());
  for (const auto seed : seeds) results.push_back(run_one(seed, make, config));
  return results;
}

std::vector<BatchResult> run_batch_parallel(std::span<const std::uint64_t> seeds, const ScenarioFactory& make,
                                            const server::ServerConfig& config) {
  std::vector<BatchResult> results(seeds.size());
  const auto n = static_cast<std::int64_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) results[std::size_t(i)] = run_one(seeds[std::size_t(i)], make, config);
  return results;
}

}  // namespace modelsync::sim
