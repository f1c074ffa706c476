#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace specsync {

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ScenarioResult {
  std::string id;
  std::uint64_t seed = 0;
  std::vector<Assertion> assertions;
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<std::string> artifacts;

  bool passed() const;
  const Assertion& assertion(const std::string& name) const;
};

const std::vector<std::string>& scenario_names();

// Runs one scenario. Missing config keys take the documented defaults. When
// `out_dir` is non-empty, intermediate data and result.json are written to
// out_dir/<name>/. Throws InvalidInput for an unknown name or a bad config;
// failed checks are reported in the result.
ScenarioResult run_scenario(const std::string& name, const nlohmann::json& config,
                            std::uint64_t seed, const std::filesystem::path& out_dir = {});

nlohmann::json to_json(const ScenarioResult& r);

// Worker threads for fan-out over seeds: SPECSYNC_THREADS if set, else the
// hardware concurrency (at least 1).
std::size_t thread_cap();

}  // namespace specsync
