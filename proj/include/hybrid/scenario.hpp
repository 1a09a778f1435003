#pragma once

// Scenario files: INI text with sections [params], [cost_model], [solver]
// and [aimd]. See README.md for the schema. Unknown keys are rejected.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybrid/aimd.hpp"
#include "hybrid/cost_model.hpp"
#include "hybrid/design_solver.hpp"
#include "hybrid/qos.hpp"

namespace hybrid {

struct ScenarioFile {
  std::string name;
  ScenarioParams params;
  std::string cost_model_ref;  // built-in model name; empty for an inline model
  CostModel cost_model;
  SolverOpts solver;
  AimdConfig aimd;
  // Fixed pool sizes for partitioning, when the scenario carries them.
  std::optional<count_t> shared_pool;
  std::optional<count_t> prosumers;

  void validate() const;
  bool operator==(const ScenarioFile&) const = default;
};

// Parses scenario text; `origin` names the source in diagnostics.
ScenarioFile parse_scenario(std::string_view text, const std::string& origin = "<string>");
ScenarioFile load_scenario(const std::filesystem::path& path);

std::string format_scenario(const ScenarioFile& s);
void save_scenario(const ScenarioFile& s, const std::filesystem::path& path);

// car-n{N}[-{pct}] and charger-n{N}[-{pct}]; the percentage defaults to 98.
bool is_builtin_scenario_name(std::string_view name);
ScenarioFile builtin_scenario(std::string_view name);
// The sixteen reference design rows, car first.
std::vector<std::string> builtin_scenario_names();

// A built-in name or a path to a scenario file.
ScenarioFile resolve_scenario(std::string_view name_or_path);

}  // namespace hybrid
